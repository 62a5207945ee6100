"""Top-level acceptance battery: one pass/fail line per criterion.

Each test runs a full criterion at its stated tolerances through the same
check functions the `suite` subcommand uses, prints a single summary
line, and fails if any individual check fails.
"""

import time

from instanton import cli


def _finish(label, checks, extra=""):
    ok = all(c.passed for c in checks)
    status = "PASS" if ok else "FAIL"
    print(f"{label}: {status} ({len(checks)} checks{extra})")
    for c in checks:
        if not c.passed:
            print(f"    failed: {c.name} = {cli.format_value(c.value)}"
                  f" (tol {c.tol})")
    assert ok, f"{label} failed"


def test_criterion_01_ricci_flat_families():
    start = time.monotonic()
    checks = cli.criterion_ricci(n_samples=200, seed=0, tol=1e-7)
    elapsed = time.monotonic() - start
    checks.append(cli.check_lt("runtime-seconds", elapsed, 120.0))
    _finish("criterion 01 (Ricci-flat suite, 200 samples)", checks,
            extra=f", {elapsed:.1f}s")


def test_criterion_02_type_table():
    _finish("criterion 02 (eigenvalue-type table)",
            cli.criterion_type_table(n_samples=64, seed=0))


def test_criterion_03_conformal_identities():
    _finish("criterion 03 (conformal Kahler identities)",
            cli.criterion_hermitian(n_samples=12, seed=3))


def test_criterion_04_toda_exactness():
    _finish("criterion 04 (Toda exactness and rebuilds)",
            cli.criterion_toda(n_points=1000, seed=0))


def test_criterion_05_integrals_and_volume():
    _finish("criterion 05 (reduction integrals and shell volume)",
            cli.criterion_integrals(seed=0))


def test_criterion_06_indicial_roots():
    _finish("criterion 06 (indicial roots, exact)",
            cli.criterion_indicial())


def test_criterion_07_toric_values():
    _finish("criterion 07 (toric intersection and classification)",
            cli.criterion_toric())


def test_criterion_08_decay_and_expansion():
    _finish("criterion 08 (asymptotic decay and expansion)",
            cli.criterion_decay(seed=0))


def test_criterion_09_compactification_chart():
    _finish("criterion 09 (compactification chart)",
            cli.criterion_compactification(seed=0))


def test_criterion_10_suite_determinism(capsys):
    argv = ["suite", "--samples", "25", "--herm-samples", "4",
            "--seed", "1"]
    code1 = cli.run(argv)
    first = capsys.readouterr().out
    code2 = cli.run(argv)
    second = capsys.readouterr().out
    checks = [
        cli.check_true("suite-exit-codes", code1 == 0 and code2 == 0,
                       value=f"{code1},{code2}"),
        cli.check_true("suite-byte-identical",
                       first == second and len(first) > 0),
    ]
    with capsys.disabled():
        _finish("criterion 10 (suite determinism)", checks)
