"""Smoke test for the ineqpanel Python bindings.

Build and install first, e.g.
    maturin build --release -m crates/python/Cargo.toml -o dist && pip install dist/ineqpanel-*.whl
"""

import math
import sys
import tempfile
from pathlib import Path

import ineqpanel

ROOT = Path(__file__).resolve().parent.parent
FIXTURE = ROOT / "crates" / "core" / "fixtures" / "institutions_scores.csv"


def main():
    assert ineqpanel.gini([0.25] * 4) == 0.0
    assert math.isclose(ineqpanel.gini([0.0, 1.0]), 0.5)
    assert math.isclose(ineqpanel.pearson([1, 2, 3], [2, 4, 6.5]), 0.9979487157886733, rel_tol=1e-12)

    split = ineqpanel.median_split([("AA", 3.0), ("BB", 5.0)])
    assert split["inclusive"] == ["BB"] and split["threshold"] == 4.0

    scores = ineqpanel.Scores.from_csv(FIXTURE)
    assert len(scores) == 28
    main = scores.split()
    assert len(main["inclusive"]) == 14 and abs(main["threshold"] - 4.29) < 1e-9
    stab = scores.stability()
    assert stab["stable"] == ["AT", "EL", "PL", "RO", "SE"]

    panel, synth_scores, inclusive = ineqpanel.simulate()
    assert len(panel.entities) == 28 and "gini" in panel.variables
    cluster = panel.subset(inclusive)
    fit = ineqpanel.estimate(cluster, "gini", ["gini(-1)", "poverty", "neetsrate(-1)", "social", "creditb"])
    coefs = dict(fit.coefficients)
    assert abs(coefs["POVERTY"] - 0.5) < 0.1, coefs
    report = fit.to_dict()
    assert report["observations"] == 84
    diag = fit.diagnostics()
    assert len(diag["rows"]) == 9

    battery = ineqpanel.unit_root_battery(cluster, "social")
    assert battery["order"] in ("I(0)", "I(1)", "undetermined")
    assert len(battery["level"]) == 12

    try:
        ineqpanel.estimate(cluster, "gini", ["no_such_variable"])
    except ValueError as e:
        assert "no_such_variable" in str(e)
    else:
        raise AssertionError("unknown regressor accepted")

    with tempfile.TemporaryDirectory() as tmp:
        code, files = ineqpanel.replicate(
            ROOT / "crates" / "cli" / "fixtures" / "synthetic_panel.csv",
            ROOT / "crates" / "cli" / "fixtures" / "synthetic_scores.csv",
            tmp,
            calibration_reps=2000,
        )
        assert code == 0, code
        assert any(f.endswith("manifest.json") for f in files)

    print(f"ineqpanel {ineqpanel.__version__}: smoke test passed")
    return 0


if __name__ == "__main__":
    sys.exit(main())
