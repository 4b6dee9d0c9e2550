//! Gauss rules on the reference triangle `{(r, s): r, s >= 0, r + s <= 1}` and
//! on the unit interval `[0, 1]`.

/// Quadrature point with weight; triangle weights sum to 1/2.
#[derive(Clone, Copy, Debug)]
pub struct TriPoint {
    pub r: f64,
    pub s: f64,
    pub w: f64,
}

/// Symmetric triangle rule exact for polynomials of the requested degree
/// (rounded up to the next available rule: 1, 2, 4, 5).
pub fn triangle(degree: usize) -> Vec<TriPoint> {
    let mut pts = Vec::new();
    match degree {
        0 | 1 => pts.push(TriPoint { r: 1.0 / 3.0, s: 1.0 / 3.0, w: 0.5 }),
        2 => {
            for &(r, s) in &[(1.0 / 6.0, 1.0 / 6.0), (2.0 / 3.0, 1.0 / 6.0), (1.0 / 6.0, 2.0 / 3.0)] {
                pts.push(TriPoint { r, s, w: 1.0 / 6.0 });
            }
        }
        3 | 4 => {
            let groups = [
                (0.445_948_490_915_965, 0.223_381_589_678_011),
                (0.091_576_213_509_771, 0.109_951_743_655_322),
            ];
            for &(a, w) in &groups {
                push_orbit3(&mut pts, a, w * 0.5);
            }
        }
        _ => {
            let sq = 15f64.sqrt();
            pts.push(TriPoint { r: 1.0 / 3.0, s: 1.0 / 3.0, w: 9.0 / 80.0 });
            push_orbit3(&mut pts, (6.0 - sq) / 21.0, (155.0 - sq) / 2400.0);
            push_orbit3(&mut pts, (6.0 + sq) / 21.0, (155.0 + sq) / 2400.0);
        }
    }
    pts
}

fn push_orbit3(pts: &mut Vec<TriPoint>, a: f64, w: f64) {
    let b = 1.0 - 2.0 * a;
    pts.push(TriPoint { r: a, s: a, w });
    pts.push(TriPoint { r: b, s: a, w });
    pts.push(TriPoint { r: a, s: b, w });
}

/// Gauss-Legendre points on `[0, 1]` as `(xi, weight)`, weights summing to 1.
pub fn interval(npts: usize) -> Vec<(f64, f64)> {
    let raw: &[(f64, f64)] = match npts {
        1 => &[(0.0, 2.0)],
        2 => &[(-0.577_350_269_189_625_8, 1.0), (0.577_350_269_189_625_8, 1.0)],
        3 => &[
            (-0.774_596_669_241_483_4, 5.0 / 9.0),
            (0.0, 8.0 / 9.0),
            (0.774_596_669_241_483_4, 5.0 / 9.0),
        ],
        4 => &[
            (-0.861_136_311_594_052_6, 0.347_854_845_137_453_9),
            (-0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
            (0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
            (0.861_136_311_594_052_6, 0.347_854_845_137_453_9),
        ],
        _ => &[
            (-0.906_179_845_938_664, 0.236_926_885_056_189_1),
            (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
            (0.0, 0.568_888_888_888_888_9),
            (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
            (0.906_179_845_938_664, 0.236_926_885_056_189_1),
        ],
    };
    raw.iter().map(|&(x, w)| (0.5 * (x + 1.0), 0.5 * w)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    // exact integral of r^a s^b over the reference triangle: a! b! / (a+b+2)!
    fn exact(a: u32, b: u32) -> f64 {
        let f = |n: u32| (1..=n).map(|k| k as f64).product::<f64>();
        f(a) * f(b) / f(a + b + 2)
    }

    #[test]
    fn triangle_rules_integrate_monomials_exactly() {
        for &deg in &[1usize, 2, 4, 5] {
            let rule = triangle(deg);
            for a in 0..=deg as u32 {
                for b in 0..=(deg as u32 - a) {
                    let q: f64 = rule.iter().map(|p| p.w * p.r.powi(a as i32) * p.s.powi(b as i32)).sum();
                    assert!((q - exact(a, b)).abs() < 1e-14, "deg {deg} r^{a} s^{b}");
                }
            }
        }
    }

    #[test]
    fn interval_rules_exact_to_degree_2n_minus_1() {
        for n in 1..=5usize {
            let rule = interval(n);
            for k in 0..(2 * n) as i32 {
                let q: f64 = rule.iter().map(|&(x, w)| w * x.powi(k)).sum();
                assert!((q - 1.0 / (k as f64 + 1.0)).abs() < 1e-14);
            }
        }
    }
}
