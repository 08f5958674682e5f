"""decoding-dynamics package.

Analysis of the decoding dynamics of masked diffusion language models.
"""

# LICENSE HEADER MANAGED BY add-license-header
# Copyright (c) 2025 The decoding-dynamics authors.
#
# This file is part of decoding-dynamics.
#
# SPDX-License-Identifier: Apache-2.0
# LICENSE HEADER MANAGED BY add-license-header

import copy
import importlib.metadata

from decoding_dynamics.base_checks import BaseCheck
from decoding_dynamics.base_checks import CheckResult
from decoding_dynamics.util import DEFAULT_SEED
from decoding_dynamics.util import LOGGER
from decoding_dynamics.util import violation_msg_formatter

__version__ = importlib.metadata.version("decoding-dynamics")

_CHECKS = {}
_DEFAULTS_LOADED = False


def reset_checks():
    """Reset the check registry to the default check families."""
    global _CHECKS, _DEFAULTS_LOADED  # pylint: disable=global-statement
    _CHECKS = {}
    _DEFAULTS_LOADED = True

    # pylint: disable=import-outside-toplevel
    from decoding_dynamics.checks import register_defaults

    register_defaults()


def _registry():
    if not _DEFAULTS_LOADED:
        reset_checks()
    return _CHECKS


def get_checks():
    """Return a copy of the check registry."""
    return copy.deepcopy(_registry())


def register_check(check, force=False):
    """Add a check to the registry.

    Args:
        check (BaseCheck): The check to register; its ``name`` is used as key.
        force (bool): If set to ``True``, no exception is raised if a check with the same name is
            already registered and it is replaced.

    .. note::
        Custom checks can be created by deriving a class from
        :class:`decoding_dynamics.BaseCheck` and implementing its ``generate()`` and
        ``evaluate()`` methods.
    """
    registry = _registry()
    if not force and check.name in registry:
        raise ValueError(
            f"The '{check.name}' check is already registered and must be unregistered before "
            "being replaced."
        )
    registry[check.name] = check


def unregister_check(name, quiet=False):
    """Remove a check from the registry.

    Args:
        name (str): The name of the check to unregister.
        quiet (bool): If set to ``True``, no exception is raised if the given check is not
            registered.

    Returns:
        The removed check.
    """
    registry = _registry()
    if not quiet and name not in registry:
        raise ValueError(f"The '{name}' check is not registered.")
    return registry.pop(name, None)


def pick_check(check, checks=None):
    """Pick a check from its name (a :class:`BaseCheck` instance is returned unchanged)."""
    if isinstance(check, BaseCheck):
        return check
    if checks is None:
        checks = _registry()
    try:
        return checks[check]
    except KeyError as exc:
        raise ValueError(f"The '{check}' check is not registered.") from exc


def run_check(check, seed=DEFAULT_SEED, n_cases=None, **kwargs):
    """Run one check and turn any exception into a violation report.

    Args:
        check (BaseCheck or str): The check or its registered name.
        seed (int): The root seed.
        n_cases (int): The number of random cases (the check default if ``None``).
        **kwargs: passed to the check.

    Returns:
        CheckResult: The result.
    """
    check = pick_check(check)
    LOGGER.debug("Check: %s with seed %s", check.name, seed)
    try:
        return check(seed=seed, n_cases=n_cases, **kwargs)
    except Exception as exception:  # pylint: disable=broad-except
        try:
            exception_args = "\n".join(str(i) for i in exception.args)
        except Exception:  # pylint: disable=broad-exception-caught
            exception_args = "UNKNOWN ERROR: Could not get information from the exception"
        exc_type = type(exception).__name__
        return CheckResult(
            name=check.name,
            family=check.family,
            n_cases=0,
            message=violation_msg_formatter(
                check.name,
                reason=f"Exception raised: ({exc_type}) {exception_args}",
                generate_kwargs=kwargs.get("generate_kwargs"),
                evaluate_kwargs=kwargs.get("evaluate_kwargs"),
            ),
        )


def run_checks(names=None, families=None, seed=DEFAULT_SEED, n_cases=None, checks=None):
    """Run several checks.

    Args:
        names (list(str)): The names of the checks to run (all if ``None``).
        families (list(str)): Only run the checks of these families.
        seed (int): The root seed.
        n_cases (int or dict): The number of cases, for all the checks or per check name.
        checks (dict): A ``dict`` to override the registered checks.

    Returns:
        list(CheckResult): The results sorted by family then name.
    """
    if checks is None:
        checks = _registry()
    if names is None:
        selected = list(checks.values())
    else:
        selected = [pick_check(name, checks) for name in names]
    if families is not None:
        selected = [c for c in selected if c.family in families]

    results = []
    for check in sorted(selected, key=lambda c: (c.family, c.name)):
        count = n_cases.get(check.name) if isinstance(n_cases, dict) else n_cases
        result = run_check(check, seed=seed, n_cases=count)
        LOGGER.info("%s: %s", check.name, "passed" if result.passed else "FAILED")
        results.append(result)
    return results


def assert_verified(*args, seed=None, **kwargs):
    """Raise an :class:`AssertionError` if a property is violated.

    .. note::
        This function has a specific behavior when run with pytest. See the doc of the
        :mod:`decoding_dynamics.pytest_plugin`.

    Args:
        *args: passed to the :func:`run_checks` function.
        seed (int): The root seed; when ``None`` the seed given to pytest or the default seed is
            used.
        **kwargs: passed to the :func:`run_checks` function.

    Returns:
        (bool) ``True`` if all the properties hold. If they do not, an :class:`AssertionError` is
        raised.
    """
    # If run with pytest, get the seed from it
    if seed is None:
        seed = getattr(assert_verified, "_pytest_seed", None)
    if seed is None:
        seed = DEFAULT_SEED
    if "n_cases" not in kwargs and getattr(assert_verified, "_pytest_n_cases", None) is not None:
        # pylint: disable=no-member
        kwargs["n_cases"] = assert_verified._pytest_n_cases

    results = run_checks(*args, seed=seed, **kwargs)

    failures = [r.message for r in results if not r.passed]
    if failures:
        raise AssertionError("\n\n\n".join(failures))

    return True
