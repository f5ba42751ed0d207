//! Brute-force fibre distance: minimizes the `g′` length of polylines with
//! argmin. It shares no code with the closed form it is compared against.

use argmin::core::{CostFunction, Error, Executor, Gradient, State};
use argmin::solver::linesearch::MoreThuenteLineSearch;
use argmin::solver::quasinewton::LBFGS;
use nalgebra::DMatrix;

type M = DMatrix<f64>;

/// Squared `g′` norm `tr(m⁻¹ d m⁻¹ d) √det m`, or `None` off the cone.
fn conformal_sq_norm(m: &M, d: &M) -> Option<f64> {
    let ch = m.clone().cholesky()?;
    let inv = ch.inverse();
    let det = ch.determinant();
    let a = &inv * d;
    Some((&a * &a).trace() * det.sqrt())
}

/// `g′` length of the straight segment from `a` to `b`, composite Simpson.
fn segment_length(a: &M, b: &M, panels: usize) -> f64 {
    let d = b - a;
    let h = 1.0 / (2 * panels) as f64;
    let speed = |s: f64| conformal_sq_norm(&(a + &d * s), &d).map_or(f64::INFINITY, f64::sqrt);
    let mut acc = speed(0.0) + speed(1.0);
    for i in 1..2 * panels {
        acc += speed(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * h / 3.0
}

fn polyline_length(points: &[M]) -> f64 {
    points.windows(2).map(|w| segment_length(&w[0], &w[1], 4)).sum()
}

/// Discrete `g′` energy of a polyline with fixed ends and interior vertices
/// `L Lᵀ`, parameterized by the lower triangles of `L`.
struct PolylineEnergy {
    n: usize,
    start: M,
    end: M,
    segments: usize,
}

impl PolylineEnergy {
    fn tri(&self) -> usize {
        self.n * (self.n + 1) / 2
    }

    fn factor(&self, p: &[f64], k: usize) -> M {
        let t = self.tri();
        let mut l = M::zeros(self.n, self.n);
        let mut idx = k * t;
        for i in 0..self.n {
            for j in 0..=i {
                l[(i, j)] = p[idx];
                idx += 1;
            }
        }
        l
    }

    fn points(&self, p: &[f64]) -> Vec<M> {
        let mut pts = Vec::with_capacity(self.segments + 1);
        pts.push(self.start.clone());
        for k in 0..self.segments - 1 {
            let l = self.factor(p, k);
            pts.push(&l * l.transpose());
        }
        pts.push(self.end.clone());
        pts
    }

    fn encode(&self, interior: &[M]) -> Vec<f64> {
        let mut out = Vec::with_capacity(interior.len() * self.tri());
        for m in interior {
            let l = m.clone().cholesky().expect("interior vertex is positive definite").l();
            for i in 0..self.n {
                for j in 0..=i {
                    out.push(l[(i, j)]);
                }
            }
        }
        out
    }
}

const OFF_CONE: f64 = 1e30;

impl CostFunction for PolylineEnergy {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, p: &Vec<f64>) -> Result<f64, Error> {
        let pts = self.points(p);
        let mut e = 0.0;
        for w in pts.windows(2) {
            let mid = (&w[0] + &w[1]) * 0.5;
            match conformal_sq_norm(&mid, &(&w[1] - &w[0])) {
                Some(v) => e += v,
                None => return Ok(OFF_CONE),
            }
        }
        Ok(e * self.segments as f64)
    }
}

impl Gradient for PolylineEnergy {
    type Param = Vec<f64>;
    type Gradient = Vec<f64>;

    fn gradient(&self, p: &Vec<f64>) -> Result<Vec<f64>, Error> {
        let pts = self.points(p);
        let k = self.segments;
        // Gradient of the energy with respect to each vertex matrix.
        let mut gv = vec![M::zeros(self.n, self.n); k + 1];
        for s in 0..k {
            let mid = (&pts[s] + &pts[s + 1]) * 0.5;
            let d = &pts[s + 1] - &pts[s];
            let Some(ch) = mid.clone().cholesky() else {
                return Ok(vec![0.0; p.len()]);
            };
            let inv = ch.inverse();
            let root = ch.determinant().sqrt();
            let a = &inv * &d * &inv;
            let q = (&inv * &d * &inv * &d).trace();
            let g_d = &a * (2.0 * root);
            let g_m = (&a * &d * &inv * -2.0 + &inv * (0.5 * q)) * root;
            gv[s] += &g_m * 0.5 - &g_d;
            gv[s + 1] += &g_m * 0.5 + &g_d;
        }
        let mut out = Vec::with_capacity(p.len());
        for (v, gv) in gv.iter().enumerate().take(k).skip(1) {
            let l = self.factor(p, v - 1);
            let g = gv * k as f64;
            let gl = (&g + g.transpose()) * &l;
            for i in 0..self.n {
                for j in 0..=i {
                    out.push(gl[(i, j)]);
                }
            }
        }
        Ok(out)
    }
}

fn minimize(problem: PolylineEnergy, init: Vec<f64>) -> Vec<f64> {
    let start = init.clone();
    let solver = LBFGS::new(MoreThuenteLineSearch::new(), 10)
        .with_tolerance_grad(1e-12)
        .expect("valid tolerance")
        .with_tolerance_cost(1e-14)
        .expect("valid tolerance");
    match Executor::new(problem, solver)
        .configure(|s| s.param(init).max_iters(400))
        .run()
    {
        Ok(res) => res.state().get_best_param().cloned().unwrap_or(start),
        Err(_) => start,
    }
}

/// Length of a numerically shortest `g′` path from `x` to `y`.
///
/// Minimizes the polyline energy starting from the straight segment, doubling
/// the vertex count from 8 to `max_segments`, and returns the shortest
/// Simpson length seen. Every candidate is a genuine path, so the value
/// approaches the distance from above.
pub fn brute_force_distance(x: &M, y: &M, max_segments: usize) -> f64 {
    let n = x.nrows();
    let mut segments = 8;
    let mut interior: Vec<M> = (1..segments)
        .map(|k| x + (y - x) * (k as f64 / segments as f64))
        .collect();
    let mut best = f64::INFINITY;
    loop {
        let problem = PolylineEnergy {
            n,
            start: x.clone(),
            end: y.clone(),
            segments,
        };
        let init = problem.encode(&interior);
        let opt = minimize(problem, init);
        let shaped = PolylineEnergy {
            n,
            start: x.clone(),
            end: y.clone(),
            segments,
        };
        let pts = shaped.points(&opt);
        best = best.min(polyline_length(&pts));
        if segments >= max_segments {
            return best;
        }
        let mut refined = Vec::with_capacity(2 * segments - 1);
        for w in pts.windows(2) {
            refined.push((&w[0] + &w[1]) * 0.5);
            refined.push(w[1].clone());
        }
        refined.pop();
        interior = refined;
        segments *= 2;
    }
}
