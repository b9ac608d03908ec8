//! Shared test oracles and generators.
#![allow(dead_code)]

use obliqua::expr::{BinOp, Expr, Func1, Func2, Var};
use proptest::prelude::*;

/// Plain recursive evaluator, written independently of the tape.
/// `None` stands for any domain failure.
pub fn naive_eval(e: &Expr, x1: f64, x2: f64) -> Option<f64> {
    let v = match e {
        Expr::Num(v) => *v,
        Expr::Pi => std::f64::consts::PI,
        Expr::Var(Var::X1) => x1,
        Expr::Var(Var::X2) => x2,
        Expr::Neg(a) => -naive_eval(a, x1, x2)?,
        Expr::Bin(op, a, b) => {
            let a = naive_eval(a, x1, x2)?;
            let b = naive_eval(b, x1, x2)?;
            match op {
                BinOp::Add => a + b,
                BinOp::Sub => a - b,
                BinOp::Mul => a * b,
                BinOp::Div if b == 0.0 => return None,
                BinOp::Div => a / b,
            }
        }
        Expr::Pow(a, n) => {
            let a = naive_eval(a, x1, x2)?;
            if *n < 0 && a == 0.0 {
                return None;
            }
            // std powi is the reference semantics for integer powers
            a.powi(*n)
        }
        Expr::Call1(f, a) => {
            let a = naive_eval(a, x1, x2)?;
            match f {
                Func1::Abs => a.abs(),
                Func1::Sqrt if a < 0.0 => return None,
                Func1::Sqrt => a.sqrt(),
                Func1::Sin => a.sin(),
                Func1::Cos => a.cos(),
                Func1::Exp => a.exp(),
                Func1::Sign => {
                    if a == 0.0 {
                        0.0
                    } else {
                        a.signum()
                    }
                }
                Func1::Step => (a >= 0.0) as i32 as f64,
            }
        }
        Expr::Call2(f, a, b) => {
            let a = naive_eval(a, x1, x2)?;
            let b = naive_eval(b, x1, x2)?;
            match f {
                Func2::Min => {
                    if a <= b {
                        a
                    } else {
                        b
                    }
                }
                Func2::Max => {
                    if a >= b {
                        a
                    } else {
                        b
                    }
                }
            }
        }
    };
    v.is_finite().then_some(v)
}

fn leaf() -> impl Strategy<Value = Expr> {
    prop_oneof![
        (0.0f64..100.0).prop_map(Expr::Num),
        (0u32..10).prop_map(|k| Expr::Num(k as f64 * 0.5)),
        Just(Expr::Pi),
        Just(Expr::Var(Var::X1)),
        Just(Expr::Var(Var::X2)),
    ]
}

/// Arbitrary ASTs over the full surface language.
pub fn any_expr() -> impl Strategy<Value = Expr> {
    leaf().prop_recursive(5, 48, 2, |inner| {
        let b = |e: Expr| Box::new(e);
        prop_oneof![
            inner.clone().prop_map(move |a| Expr::Neg(b(a))),
            (
                prop_oneof![Just(BinOp::Add), Just(BinOp::Sub), Just(BinOp::Mul), Just(BinOp::Div)],
                inner.clone(),
                inner.clone()
            )
                .prop_map(|(op, a, c)| Expr::Bin(op, Box::new(a), Box::new(c))),
            (inner.clone(), -3i32..5).prop_map(|(a, n)| Expr::Pow(Box::new(a), n)),
            (
                prop_oneof![
                    Just(Func1::Abs),
                    Just(Func1::Sqrt),
                    Just(Func1::Sin),
                    Just(Func1::Cos),
                    Just(Func1::Exp),
                    Just(Func1::Sign),
                    Just(Func1::Step)
                ],
                inner.clone()
            )
                .prop_map(|(f, a)| Expr::Call1(f, Box::new(a))),
            (prop_oneof![Just(Func2::Min), Just(Func2::Max)], inner.clone(), inner)
                .prop_map(|(f, a, c)| Expr::Call2(f, Box::new(a), Box::new(c))),
        ]
    })
}

/// Smooth ASTs with moderate growth on [-1, 1]^2: no kinks, division only
/// by `1 + u^2`.
pub fn smooth_expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (0.0f64..3.0).prop_map(Expr::Num),
        Just(Expr::Var(Var::X1)),
        Just(Expr::Var(Var::X2)),
    ];
    leaf.prop_recursive(4, 32, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|a| Expr::Neg(Box::new(a))),
            (prop_oneof![Just(BinOp::Add), Just(BinOp::Sub), Just(BinOp::Mul)], inner.clone(), inner.clone())
                .prop_map(|(op, a, c)| Expr::Bin(op, Box::new(a), Box::new(c))),
            (inner.clone(), 0i32..4).prop_map(|(a, n)| Expr::Pow(Box::new(a), n)),
            (prop_oneof![Just(Func1::Sin), Just(Func1::Cos)], inner.clone())
                .prop_map(|(f, a)| Expr::Call1(f, Box::new(a))),
            inner.clone().prop_map(|a| Expr::Call1(Func1::Exp, Box::new(Expr::Call1(Func1::Sin, Box::new(a))))),
            (inner.clone(), inner).prop_map(|(a, c)| {
                let den = Expr::Bin(
                    BinOp::Add,
                    Box::new(Expr::Num(1.0)),
                    Box::new(Expr::Pow(Box::new(c), 2)),
                );
                Expr::Bin(BinOp::Div, Box::new(a), Box::new(den))
            }),
        ]
    })
}

pub fn unit_point() -> impl Strategy<Value = (f64, f64)> {
    (-1.0f64..1.0, -1.0f64..1.0)
}

pub mod polygons {
    use std::collections::BTreeSet;
    use std::f64::consts::{PI, TAU};

    use nalgebra::{DMatrix, Matrix2, Vector2};
    use obliqua::polyhedral::PolygonSpec;
    use rand::rngs::StdRng;
    use rand::Rng;

    pub type P = Vector2<f64>;

    fn unit(a: f64) -> P {
        P::new(a.cos(), a.sin())
    }

    /// Normal angles whose largest circular gap is below pi, so the
    /// polygon is bounded.
    fn bounded_angles(rng: &mut StdRng, m: usize) -> Vec<f64> {
        loop {
            let mut a: Vec<f64> = (0..m).map(|_| rng.gen_range(0.0..TAU)).collect();
            a.sort_by(f64::total_cmp);
            let gap = a.windows(2).map(|w| w[1] - w[0]).fold(a[0] + TAU - a[m - 1], f64::max);
            let spread = a.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
            if gap < PI - 0.05 && spread > 1e-3 {
                return a;
            }
        }
    }

    /// Random bounded polygon around the origin; may contain redundant
    /// constraints. Directions are either normals turned by less than a
    /// right angle or uniformly random.
    pub fn random_polygon(rng: &mut StdRng, m: usize) -> PolygonSpec {
        build(rng, m, 0.3..1.5)
    }

    fn build(rng: &mut StdRng, m: usize, radii: std::ops::Range<f64>) -> PolygonSpec {
        let angles = bounded_angles(rng, m);
        let normals: Vec<P> = angles.iter().map(|a| unit(*a)).collect();
        let offsets: Vec<f64> = (0..m).map(|_| -rng.gen_range(radii.clone())).collect();
        let tilted = rng.gen_bool(0.5);
        let directions: Vec<P> = angles
            .iter()
            .map(|a| if tilted { unit(a + rng.gen_range(-1.45..1.45)) } else { unit(rng.gen_range(0.0..TAU)) })
            .collect();
        PolygonSpec::new(normals, offsets, directions).unwrap()
    }

    /// Random polygon whose every constraint is essential, with `m` sides.
    /// Lines nearly tangent to a common circle are rarely redundant, which
    /// keeps rejection cheap for large `m`.
    pub fn random_minimal_polygon(rng: &mut StdRng, m: usize) -> PolygonSpec {
        let radii = if m <= 6 { 0.3..1.5 } else { 0.9..1.1 };
        loop {
            let p = build(rng, m, radii.clone());
            if oracle_minimal(&p).iter().all(|r| !r) {
                return p;
            }
        }
    }

    fn tie(p: &PolygonSpec) -> f64 {
        1e-10 * (1.0 + p.offsets().iter().fold(0.0f64, |a, b| a.max(b.abs())))
    }

    fn slack(p: &PolygonSpec, i: usize, x: P) -> f64 {
        x.dot(&p.normals()[i]) - p.offsets()[i]
    }

    pub fn is_bounded(p: &PolygonSpec) -> bool {
        let mut a: Vec<f64> = p.normals().iter().map(|n| n.y.atan2(n.x)).collect();
        a.sort_by(f64::total_cmp);
        let m = a.len();
        m >= 3 && a.windows(2).map(|w| w[1] - w[0]).fold(a[0] + TAU - a[m - 1], f64::max) < PI
    }

    /// Every pairwise line intersection that satisfies all constraints,
    /// deduplicated, with active sets.
    pub fn oracle_vertices(p: &PolygonSpec) -> Vec<(P, BTreeSet<usize>)> {
        let m = p.len();
        let t = tie(p);
        let mut out: Vec<(P, BTreeSet<usize>)> = Vec::new();
        for i in 0..m {
            for j in i + 1..m {
                let (a, b) = (p.normals()[i], p.normals()[j]);
                let mat = Matrix2::new(a.x, a.y, b.x, b.y);
                let Some(x) = mat.try_inverse().map(|inv| inv * P::new(p.offsets()[i], p.offsets()[j])) else {
                    continue;
                };
                if (0..m).all(|k| slack(p, k, x) >= -t) && !out.iter().any(|(y, _)| (y - x).norm() <= t) {
                    let active = (0..m).filter(|&k| slack(p, k, x).abs() <= t).collect();
                    out.push((x, active));
                }
            }
        }
        out
    }

    /// For each constraint, whether dropping it leaves the polygon
    /// unchanged: the rest stays bounded and all of its vertices satisfy
    /// the dropped constraint.
    pub fn oracle_minimal(p: &PolygonSpec) -> Vec<bool> {
        (0..p.len())
            .map(|j| {
                let rest = p.without(j);
                is_bounded(&rest) && oracle_vertices(&rest).iter().all(|(x, _)| slack(p, j, *x) >= -tie(p))
            })
            .collect()
    }

    /// Maximal sets straight from the definition: `K` is maximal iff
    /// `F_K` is nonempty and strictly shrinks for every strict superset.
    /// Faces of a bounded polygon are identified with their vertex sets.
    pub fn oracle_maximal(p: &PolygonSpec) -> Vec<Vec<usize>> {
        let m = p.len();
        let verts = oracle_vertices(p);
        let face = |k: u32| -> BTreeSet<usize> {
            (0..verts.len()).filter(|&v| (0..m).all(|i| k & (1 << i) == 0 || verts[v].1.contains(&i))).collect()
        };
        let faces: Vec<BTreeSet<usize>> = (0..1u32 << m).map(face).collect();
        let mut out = Vec::new();
        for k in 1..1u32 << m {
            if faces[k as usize].is_empty() {
                continue;
            }
            let maximal = (1..1u32 << m)
                .filter(|&s| s != k && s & k == k)
                .all(|s| faces[s as usize].is_subset(&faces[k as usize]) && faces[s as usize] != faces[k as usize]);
            if maximal {
                out.push((0..m).filter(|i| k & (1 << i) != 0).collect());
            }
        }
        out.sort();
        out
    }

    /// Completely-S by brute force: positive diagonal and some
    /// `x = (cos t, sin t)`, `t` on an open grid of `(0, pi/2)`, with both
    /// rows positive.
    pub fn oracle_completely_s(a: &DMatrix<f64>, n: usize) -> bool {
        if !(a[(0, 0)] > 0.0 && a[(1, 1)] > 0.0) {
            return false;
        }
        (0..n).any(|k| {
            let t = (k as f64 + 0.5) / n as f64 * PI / 2.0;
            let (c, s) = (t.cos(), t.sin());
            a[(0, 0)] * c + a[(0, 1)] * s > 0.0 && a[(1, 0)] * c + a[(1, 1)] * s > 0.0
        })
    }
}
