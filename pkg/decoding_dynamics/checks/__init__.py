"""Property checks of the decoding-dynamics modules."""

# LICENSE HEADER MANAGED BY add-license-header
# Copyright (c) 2025 The decoding-dynamics authors.
#
# This file is part of decoding-dynamics.
#
# SPDX-License-Identifier: Apache-2.0
# LICENSE HEADER MANAGED BY add-license-header

FAMILIES = ("information", "metrics", "chains", "decoding", "runtime", "puzzles")


def register_defaults(force=False):
    """Register the checks of every family."""
    # pylint: disable=import-outside-toplevel
    from decoding_dynamics.checks import chains
    from decoding_dynamics.checks import decoding
    from decoding_dynamics.checks import information
    from decoding_dynamics.checks import metrics
    from decoding_dynamics.checks import puzzles
    from decoding_dynamics.checks import runtime

    for module in (information, metrics, chains, decoding, runtime, puzzles):
        module.register(force=force)
