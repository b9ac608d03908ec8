//! Newton projection onto level sets and quasi-uniform boundary sampling.

use super::{Domain, DomainPiece, GeometryError, Point, Result};

/// Project `x` onto `{psi = 0}` by Newton steps along the gradient.
/// Returns `None` if the iteration fails to reach `|psi| <= tol`.
pub fn newton_project(piece: &DomainPiece, x: Point, tol: f64, max_iter: usize) -> Option<Point> {
    let mut y = x;
    for _ in 0..max_iter {
        let v = piece.psi.eval(y).ok()?;
        if v.abs() <= tol {
            return Some(y);
        }
        let g = piece.grad_field().eval(y).ok()?;
        let gg = g.norm_squared();
        if !(gg > 1e-300) {
            return None;
        }
        y -= (v / gg) * g;
    }
    let v = piece.psi.eval(y).ok()?;
    (v.abs() <= tol).then_some(y)
}

/// Newton projection iterated to machine precision: stops once the step
/// no longer shrinks the residual. Accepts the result if `|psi| <= tol`.
pub fn newton_project_tight(piece: &DomainPiece, x: Point, tol: f64) -> Option<Point> {
    let mut y = x;
    let mut best = piece.psi.eval(y).ok()?.abs();
    for _ in 0..100 {
        if best == 0.0 {
            break;
        }
        let v = piece.psi.eval(y).ok()?;
        let g = piece.grad_field().eval(y).ok()?;
        let gg = g.norm_squared();
        if !(gg > 1e-300) {
            return None;
        }
        let next = y - (v / gg) * g;
        let r = piece.psi.eval(next).ok()?.abs();
        if r >= best && (next - y).norm() <= 1e-15 * (1.0 + y.norm()) {
            break;
        }
        if r > best && best <= tol {
            break;
        }
        y = next;
        best = best.min(r);
    }
    (piece.psi.eval(y).ok()?.abs() <= tol).then_some(y)
}

impl Domain {
    /// Up to `count` points of `{psi^piece = 0}` inside the bounding box,
    /// spread quasi-uniformly by farthest-point selection among Newton
    /// projections of a grid. With `within_closure`, only points of the
    /// closure of `D` are kept.
    pub fn boundary_sample(&self, piece: usize, count: usize, within_closure: bool) -> Result<Vec<Point>> {
        let p = &self.pieces[piece];
        let n = ((4 * count.max(16)) as f64).sqrt().ceil() as usize;
        let tol = self.tol.boundary_tol;
        let mut cands: Vec<Point> = Vec::new();
        for seed in self.bbox.grid(n) {
            let Some(y) = newton_project(p, seed, tol, 60) else { continue };
            if !self.bbox.contains(y) {
                continue;
            }
            if within_closure && !self.in_closure(y, tol) {
                continue;
            }
            cands.push(y);
        }
        if cands.is_empty() {
            return Err(GeometryError::EmptyBoundary(piece));
        }
        cands.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
        cands.dedup_by(|a, b| (*a - *b).norm() <= 1e-12);
        Ok(farthest_points(&cands, count))
    }
}

/// Greedy farthest-point subset, starting from the first candidate.
fn farthest_points(cands: &[Point], count: usize) -> Vec<Point> {
    if cands.len() <= count {
        return cands.to_vec();
    }
    let mut chosen = Vec::with_capacity(count);
    let mut dist = vec![f64::INFINITY; cands.len()];
    let mut next = 0usize;
    for _ in 0..count {
        chosen.push(cands[next]);
        let c = cands[next];
        let mut best = 0usize;
        let mut best_d = -1.0;
        for (k, q) in cands.iter().enumerate() {
            let d = (q - c).norm_squared();
            if d < dist[k] {
                dist[k] = d;
            }
            if dist[k] > best_d {
                best_d = dist[k];
                best = k;
            }
        }
        next = best;
    }
    chosen
}
