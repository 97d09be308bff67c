"""PSNR and Bjontegaard delta-rate for RD-curve comparison."""

import numpy as np

from .errors import ContractViolation

PSNR_CAP = 100.0


def psnr(a: np.ndarray, b: np.ndarray, peak: float = 255.0) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ContractViolation(f"image dims differ: {a.shape} vs {b.shape}")
    mse = float(np.mean(np.square(a - b)))
    if mse == 0.0:
        return PSNR_CAP
    return min(PSNR_CAP, 10.0 * np.log10(peak * peak / mse))


def _fit_log_rate(points):
    """Cubic fit log(rate) = f(psnr); 4 points interpolate exactly."""
    rates = np.array([p[0] for p in points], dtype=np.float64)
    quals = np.array([p[1] for p in points], dtype=np.float64)
    return np.polyfit(quals, np.log(rates), 3)


def _check_points(points, label):
    if len(points) < 4:
        raise ContractViolation(f"{label}: need >= 4 RD points, got {len(points)}")
    for bpp, _ in points:
        if bpp <= 0:
            raise ContractViolation(f"{label}: bpp must be positive, got {bpp}")


def bd_rate(anchor, test) -> float:
    """Average rate difference of `test` vs `anchor` in percent over the
    common PSNR interval (negative = test needs fewer bits).

    Points are (bpp, psnr) pairs.  Both curves get a cubic log-rate fit
    integrated analytically over the PSNR overlap.
    """
    _check_points(anchor, "anchor")
    _check_points(test, "test")
    qa = [p[1] for p in anchor]
    qt = [p[1] for p in test]
    lo = max(min(qa), min(qt))
    hi = min(max(qa), max(qt))
    if hi <= lo:
        raise ContractViolation(
            f"no PSNR overlap between curves ([{min(qa)}, {max(qa)}] vs "
            f"[{min(qt)}, {max(qt)}])")
    pa = _fit_log_rate(anchor)
    pt = _fit_log_rate(test)
    ia = np.polyint(pa)
    it = np.polyint(pt)
    int_a = np.polyval(ia, hi) - np.polyval(ia, lo)
    int_t = np.polyval(it, hi) - np.polyval(it, lo)
    avg_log_diff = (int_t - int_a) / (hi - lo)
    return float((np.exp(avg_log_diff) - 1.0) * 100.0)


def read_rd_csv(path):
    """RD points from CSV lines `bpp,psnr`; `#` comments and blanks ignored."""
    points = []
    with open(path) as f:
        for line_no, line in enumerate(f, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 2:
                raise ContractViolation(
                    f"{path}:{line_no}: expected 'bpp,psnr', got {line!r}")
            points.append((float(parts[0]), float(parts[1])))
    return points


def write_rd_csv(path, points) -> None:
    with open(path, "w") as f:
        f.write("# bpp,psnr\n")
        for bpp, q in points:
            f.write(f"{bpp},{q}\n")
