"""Robust planar predicates.

Both predicates first evaluate the determinant in floating point and accept
the sign when it exceeds a forward error bound (Shewchuk's static filter).
Otherwise the determinant is recomputed exactly with rational arithmetic, so
the returned sign is exact for every input representable as doubles.
"""

from fractions import Fraction
from typing import Sequence

EPSILON = 2.0 ** -53
CCW_ERRBOUND_A = (3.0 + 16.0 * EPSILON) * EPSILON
ICC_ERRBOUND_A = (10.0 + 96.0 * EPSILON) * EPSILON

Point2 = Sequence[float]


def _sign(value) -> int:
    if value > 0:
        return 1
    if value < 0:
        return -1
    return 0


def orientation_exact(a: Point2, b: Point2, c: Point2) -> int:
    ax, ay = Fraction(a[0]), Fraction(a[1])
    bx, by = Fraction(b[0]), Fraction(b[1])
    cx, cy = Fraction(c[0]), Fraction(c[1])
    return _sign((ax - cx) * (by - cy) - (ay - cy) * (bx - cx))


def orientation(a: Point2, b: Point2, c: Point2) -> int:
    """Sign of the signed area of triangle abc: +1 counterclockwise, -1 clockwise, 0 collinear."""
    detleft = (a[0] - c[0]) * (b[1] - c[1])
    detright = (a[1] - c[1]) * (b[0] - c[0])
    det = detleft - detright
    errbound = CCW_ERRBOUND_A * (abs(detleft) + abs(detright))
    if det > errbound:
        return 1
    if -det > errbound:
        return -1
    return orientation_exact(a, b, c)


def incircle_exact(a: Point2, b: Point2, c: Point2, d: Point2) -> int:
    dx, dy = Fraction(d[0]), Fraction(d[1])
    adx, ady = Fraction(a[0]) - dx, Fraction(a[1]) - dy
    bdx, bdy = Fraction(b[0]) - dx, Fraction(b[1]) - dy
    cdx, cdy = Fraction(c[0]) - dx, Fraction(c[1]) - dy
    alift = adx * adx + ady * ady
    blift = bdx * bdx + bdy * bdy
    clift = cdx * cdx + cdy * cdy
    det = (alift * (bdx * cdy - cdx * bdy)
           + blift * (cdx * ady - adx * cdy)
           + clift * (adx * bdy - bdx * ady))
    return _sign(det)


def incircle(a: Point2, b: Point2, c: Point2, d: Point2) -> int:
    """+1 if d lies inside the circle through a, b, c (given counterclockwise), -1 outside, 0 on it.

    For a clockwise triple the sign is reversed, as for the underlying determinant.
    """
    adx, ady = a[0] - d[0], a[1] - d[1]
    bdx, bdy = b[0] - d[0], b[1] - d[1]
    cdx, cdy = c[0] - d[0], c[1] - d[1]

    bdxcdy = bdx * cdy
    cdxbdy = cdx * bdy
    alift = adx * adx + ady * ady
    cdxady = cdx * ady
    adxcdy = adx * cdy
    blift = bdx * bdx + bdy * bdy
    adxbdy = adx * bdy
    bdxady = bdx * ady
    clift = cdx * cdx + cdy * cdy

    det = (alift * (bdxcdy - cdxbdy)
           + blift * (cdxady - adxcdy)
           + clift * (adxbdy - bdxady))
    permanent = ((abs(bdxcdy) + abs(cdxbdy)) * alift
                 + (abs(cdxady) + abs(adxcdy)) * blift
                 + (abs(adxbdy) + abs(bdxady)) * clift)
    errbound = ICC_ERRBOUND_A * permanent
    if det > errbound:
        return 1
    if -det > errbound:
        return -1
    return incircle_exact(a, b, c, d)


def in_diametral_circle(a: Point2, b: Point2, p: Point2) -> bool:
    """True if p lies strictly inside the circle with diameter ab."""
    t1 = (p[0] - a[0]) * (p[0] - b[0])
    t2 = (p[1] - a[1]) * (p[1] - b[1])
    dot = t1 + t2
    if abs(dot) > 8.0 * EPSILON * (abs(t1) + abs(t2)):
        return dot < 0
    exact = (Fraction(p[0]) - Fraction(a[0])) * (Fraction(p[0]) - Fraction(b[0])) \
        + (Fraction(p[1]) - Fraction(a[1])) * (Fraction(p[1]) - Fraction(b[1]))
    return exact < 0
