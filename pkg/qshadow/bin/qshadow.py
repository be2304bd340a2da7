#!/usr/bin/env python
# -*- coding: utf-8 -*-

import argparse
import logging
import sys
import traceback

from qshadow.cli import COMMANDS, RunConfig, exit_code, run
from qshadow.gallery import DEFAULT_ETA, GALLERY

###############################################################################

log = logging.getLogger()
logging.basicConfig(level=logging.INFO,
                    format='[%(levelname)4s:%(lineno)4s %(asctime)s] %(message)s')

###############################################################################


class Args(argparse.Namespace):

    def __init__(self, argv=None):
        self.debug = False
        self.__parse(argv)

    def __parse(self, argv):
        p = argparse.ArgumentParser(prog='qshadow',
                                    description=('Quasi-shadowing of pseudotrajectories of nonautonomous systems '
                                                 'with a partial exponential dichotomy. Every command writes a JSON '
                                                 'report next to a markdown summary and exits with 0 on pass, 2 when '
                                                 'a contraction or precondition fails, 3 when a verification fails '
                                                 'and 4 on input errors.'))
        p.add_argument('--debug', action='store_true', dest='debug', help=argparse.SUPPRESS)
        p.add_argument('--config', action='store', dest='config', default=None,
                       help='A run configuration JSON file. Replaces every other option.')
        sub = p.add_subparsers(dest='command')

        def _common(parser, norm=True):
            parser.add_argument('--out', action='store', dest='out', default=None,
                                help='Filepath for the JSON report.')
            parser.add_argument('--seed', action='store', dest='seed', type=int, default=0,
                                help='Seed of every randomized check.')
            parser.add_argument('--threads', action='store', dest='n_workers', type=int, default=None,
                                help='Number of threads. Defaults to QSHADOW_THREADS or the machine size.')
            if norm:
                parser.add_argument('--norm', action='store', dest='norm', default='sup',
                                    help='Sequence norm: sup, c0, l1, l2, lp:<p>, orlicz:power:<e> or orlicz:exp.')
                parser.add_argument('--ambient', action='store', dest='ambient', default='euclidean',
                                    choices=['euclidean', 'sup'], help='Norm on the state space.')
            parser.add_argument('--epsilon', action='store', dest='epsilon', type=float, default=0.1,
                                help='Requested shadowing distance.')

        solve = sub.add_parser('solve', help='Quasi-shadow a pseudotrajectory.')
        _common(solve)
        solve.add_argument('--system', action='store', dest='system', required=True,
                           help='Filepath to a system JSON file.')
        solve.add_argument('--perturbation', action='store', dest='perturbation', default=None,
                           help='Filepath to a perturbation JSON file. Defaults to the zero perturbation.')
        solve.add_argument('--pseudo', action='store', dest='pseudo', required=True,
                           help='Filepath to the pseudotrajectory CSV (columns n, c0, c1, ...).')
        solve.add_argument('--plot-data', action='store', dest='plot_data', default=None,
                           help='Filepath for per index residual and correction norms as CSV.')
        solve.add_argument('--tol', action='store', dest='tol', type=float, default=1e-12,
                           help='Fixed point tolerance.')
        solve.add_argument('--max-iterations', action='store', dest='max_iterations', type=int, default=None,
                           help='Iteration cap. Defaults to a bound derived from the contraction constant.')
        solve.add_argument('--force', action='store_true', dest='force',
                           help='Solve even when the pseudotrajectory is larger than delta(epsilon).')
        solve.add_argument('--trials', action='store', dest='trials', type=int, default=0,
                           help='Number of random starts of the uniqueness probe.')

        verify = sub.add_parser('verify', help='Recheck a quasi-shadowing report.')
        _common(verify, norm=False)
        verify.add_argument('--report', action='store', dest='report', required=True,
                            help='Filepath to the report JSON written by solve.')
        verify.add_argument('--system', action='store', dest='system', required=True)
        verify.add_argument('--perturbation', action='store', dest='perturbation', default=None)
        verify.add_argument('--pseudo', action='store', dest='pseudo', required=True)
        verify.add_argument('--verify-tol', action='store', dest='verify_tol', type=float, default=1e-9,
                            help='Tolerance of the residual and membership checks.')

        dichotomy = sub.add_parser('verify-dichotomy', help='Validate a splitting and check or fit its constants.')
        _common(dichotomy, norm=False)
        dichotomy.add_argument('--system', action='store', dest='system', required=True)

        conjugacy = sub.add_parser('conjugacy', help='Evaluate and verify the quasi-conjugacy on a grid.')
        _common(conjugacy, norm=False)
        conjugacy.add_argument('--system', action='store', dest='system', required=True)
        conjugacy.add_argument('--perturbation', action='store', dest='perturbation', default=None)
        conjugacy.add_argument('--grid', action='store', dest='grid', required=True,
                               help='Filepath to a grid JSON file listing (m, y) pairs and optional radii.')
        conjugacy.add_argument('--margin', action='store', dest='margin', type=int, default=None,
                               help='Probe margin on each side of m.')

        flow = sub.add_parser('flow', help='Quasi-shadow an approximate solution of a differential equation.')
        _common(flow, norm=False)
        flow.add_argument('--spec', action='store', dest='spec', required=True,
                          help='Filepath to a flow spec JSON file.')
        flow.add_argument('--path', action='store', dest='path', required=True,
                          help='Filepath to the sampled path CSV (columns t, c0, c1, ...).')
        flow.add_argument('--h', action='store', dest='h', type=float, default=None,
                          help='Integration step. Must divide 1.')
        flow.add_argument('--defect', action='store', dest='defect', type=float, default=None,
                          help='Declared sup defect of the path. Estimated from the samples when omitted.')
        flow.add_argument('--plot-data', action='store', dest='plot_data', default=None,
                          help='Filepath for the deviation curve as CSV.')
        flow.add_argument('--force', action='store_true', dest='force')

        gallery = sub.add_parser('gallery', help='Write the files of a builtin example.')
        _common(gallery)
        gallery.add_argument('name', action='store', choices=GALLERY, help='The builtin system.')
        gallery.add_argument('--eta', action='store', dest='eta', type=float, default=DEFAULT_ETA,
                             help='Size of the closed form bump.')

        p.parse_args(argv, namespace=self)
        if self.config is None and self.command is None:
            p.error(f"a command is required: {', '.join(COMMANDS)}")

    def to_config(self) -> RunConfig:
        if self.config is not None:
            return RunConfig.load(self.config)
        values = {k: v for k, v in vars(self).items() if k in RunConfig._fields}
        return RunConfig.from_dict(values)


###############################################################################

def main(argv=None):
    args = None
    try:
        args = Args(argv)
        code = run(args.to_config())
        if code != 0:
            log.error(f"Completed with failed checks (exit code {code})")
        sys.exit(code)

    except Exception as e:
        log.error("=============================================")
        if args is not None and args.debug:
            log.error("\n\n" + traceback.format_exc())
            log.error("=============================================")
        log.error("\n\n" + str(e) + "\n")
        log.error("=============================================")
        sys.exit(exit_code(e))


###############################################################################
# Allow caller to directly run this module (usually in development scenarios)

if __name__ == '__main__':
    main()
