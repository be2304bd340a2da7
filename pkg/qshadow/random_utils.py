#!/usr/bin/env python
# -*- coding: utf-8 -*-

import zlib

import numpy as np

###############################################################################


def named_rng(seed: int, name: str) -> np.random.Generator:
    """
    Create a generator that depends only on the run seed and a stream name.

    :param seed: The run seed.
    :param name: Name of the random stream, for example "uniqueness".
    :return: A numpy Generator.
    """
    stream = zlib.crc32(name.encode("utf-8"))
    # SeedSequence only accepts non-negative entropy
    return np.random.default_rng(np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, stream]))
