"""Smoke test of the lpiso extension module."""

import math

import lpiso


def close(a, b, tol):
    assert abs(a - b) <= tol, (a, b)


def main():
    close(lpiso.sphere_volume(2), 4 * math.pi, 1e-12)

    ball = lpiso.ball_from_volume(2, 0.0, math.pi)
    close(ball["radius"], 1.0, 1e-12)
    close(ball["area"], 2 * math.pi, 1e-12)

    cert = lpiso.closed_form_certificate(4, 0.0, 1.0)
    close(cert["a"], 1.0, 1e-12)
    close(cert["d"], 12.0, 1e-12)
    assert lpiso.verify_certificate(4, 1.0, 0.7)["passed"]
    assert lpiso.verify_certificate(4, -1.0, 0.7)["passed"]

    res = lpiso.measure_residuals(4, -1.0, 0.8)
    assert max(abs(res[k]) for k in ("santalo", "croke1", "croke2", "croke3")) < 1e-10

    lp = lpiso.isoperimetric_lp(2, 1.0, 1.0)
    assert abs(lp["relative_error"]) < 0.02, lp

    assert lpiso.verify_h_nonneg("spherical", 40)["min"] >= -1e-9
    assert lpiso.smallness(-1.0, 0.5, 0.5)["ok"]
    assert not lpiso.smallness(-1.0, 2.0, 2.0)["ok"]
    assert lpiso.ch2_counterexample_search(10)["best_margin"] < 0

    close(lpiso.gravity("disk", 1.0)["gravity"], 0.5, 1e-10)
    assert lpiso.gravity("square", 1.0)["margin"] > 0

    close(lpiso.relative_bound(2, 0.0, 2, math.pi / 2), math.pi, 1e-12)

    try:
        lpiso.ball_from_volume(2, 1.0, 100.0)
    except ValueError:
        pass
    else:
        raise AssertionError("oversized spherical ball accepted")

    print("lpiso", lpiso.__version__, "smoke test passed")


if __name__ == "__main__":
    main()
