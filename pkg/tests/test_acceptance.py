"""Acceptance criteria: one [PASS]/[FAIL] line per criterion.

Run under pytest (lines are printed with capture disabled) or directly:
    python3 tests/test_acceptance.py [--seed 7]
"""
import functools
import sys

import pytest

from whspace import acceptance

SEED = 7
NUMBERS = [c[0] for c in acceptance.CRITERIA]


@functools.lru_cache(maxsize=None)
def _result(number, bundle_dir):
    return acceptance.run_one(number, SEED, bundle_dir)


@pytest.fixture(scope="session")
def bundle_dir(tmp_path_factory):
    return str(tmp_path_factory.mktemp("repro"))


@pytest.mark.parametrize("number", NUMBERS)
def test_criterion(number, bundle_dir, capsys):
    r = _result(number, bundle_dir)
    with capsys.disabled():
        print("\n" + r.line())
    assert r.passed, r.detail


def main(argv=None):
    import argparse
    ap = argparse.ArgumentParser()
    ap.add_argument("--seed", type=int, default=SEED)
    ap.add_argument("--bundle-dir", default="repro")
    args = ap.parse_args(argv)
    results = acceptance.run_all(args.seed, args.bundle_dir)
    for r in results:
        print(r.line())
    passed = sum(r.passed for r in results)
    print(f"{passed}/{len(results)} criteria passed")
    return 0 if passed == len(results) else 1


if __name__ == "__main__":
    sys.exit(main())
