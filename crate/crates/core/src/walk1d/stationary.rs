use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::WalkChain;
use crate::convex1d::ConvexFn1d;
use crate::fmt::f17;
use crate::{Error, Result};

pub const POWER_TOL: f64 = 1e-12;
pub const POWER_MAX_ITERS: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StationaryMethod {
    ClosedForm,
    LinearSolve,
    PowerIteration,
}

impl fmt::Display for StationaryMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::ClosedForm => "closed_form",
            Self::LinearSolve => "linear_solve",
            Self::PowerIteration => "power_iteration",
        })
    }
}

impl FromStr for StationaryMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "closed_form" | "closed" => Ok(Self::ClosedForm),
            "linear_solve" | "linear" => Ok(Self::LinearSolve),
            "power_iteration" | "power" => Ok(Self::PowerIteration),
            other => Err(Error::InvalidParameter(format!("unknown stationary method `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationaryResult {
    pub p: Vec<f64>,
    pub method: StationaryMethod,
    /// `|p P - p|_inf`.
    pub residual: f64,
}

fn normalized(mut p: Vec<f64>) -> Vec<f64> {
    let total: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= total);
    p
}

/// Product formula `p_i ∝ prod_{j<i} (1 - a_j) / prod_{1<=j<=i} a_j`,
/// accumulated in log space. A factor `1 - a_j = 0` zeroes every later
/// state directly.
pub fn stationary_closed_form(chain: &WalkChain) -> Result<StationaryResult> {
    let a = chain.a();
    let n = chain.n();
    let mut log_p = vec![0.0; n + 1];
    let mut cut = None;
    for i in 1..=n {
        if a[i - 1] == 1.0 {
            cut = Some(i);
            break;
        }
        if a[i] <= 0.0 {
            return Err(Error::ClosedFormUndefined { index: i });
        }
        log_p[i] = log_p[i - 1] + (1.0 - a[i - 1]).ln() - a[i].ln();
    }
    let live = cut.unwrap_or(n + 1);
    let max = log_p[..live].iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let p: Vec<f64> = (0..=n).map(|i| if i < live { (log_p[i] - max).exp() } else { 0.0 }).collect();
    let p = normalized(p);
    let residual = chain.residual(&p);
    Ok(StationaryResult { p, method: StationaryMethod::ClosedForm, residual })
}

/// Solves a tridiagonal system by Gaussian elimination with partial pivoting.
///
/// Row `i` reads `sub[i-1] x[i-1] + diag[i] x[i] + sup[i] x[i+1] = rhs[i]`.
pub fn solve_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    if n == 0 || sub.len() + 1 != n || sup.len() + 1 != n || rhs.len() != n {
        return Err(Error::InvalidParameter("tridiagonal bands have inconsistent lengths".into()));
    }
    let mut dl = sub.to_vec();
    let mut d = diag.to_vec();
    let mut du = sup.to_vec();
    // second superdiagonal, filled by row interchanges
    let mut du2 = vec![0.0; n.saturating_sub(2)];
    let mut b = rhs.to_vec();
    for i in 0..n - 1 {
        if d[i].abs() >= dl[i].abs() {
            if d[i] == 0.0 {
                return Err(Error::Singular { row: i });
            }
            let fact = dl[i] / d[i];
            d[i + 1] -= fact * du[i];
            b[i + 1] -= fact * b[i];
        } else {
            let fact = d[i] / dl[i];
            d[i] = dl[i];
            let temp = d[i + 1];
            d[i + 1] = du[i] - fact * temp;
            if i + 2 < n {
                du2[i] = du[i + 1];
                du[i + 1] = -fact * du2[i];
            }
            du[i] = temp;
            let temp = b[i];
            b[i] = b[i + 1];
            b[i + 1] = temp - fact * b[i + 1];
        }
        dl[i] = 0.0;
    }
    if d[n - 1] == 0.0 {
        return Err(Error::Singular { row: n - 1 });
    }
    let mut x = vec![0.0; n];
    x[n - 1] = b[n - 1] / d[n - 1];
    if n >= 2 {
        x[n - 2] = (b[n - 2] - du[n - 2] * x[n - 1]) / d[n - 2];
    }
    for i in (0..n.saturating_sub(2)).rev() {
        x[i] = (b[i] - du[i] * x[i + 1] - du2[i] * x[i + 2]) / d[i];
    }
    Ok(x)
}

// Balance equations for columns 1..=n with p_0 pinned to one. State 0
// carries the largest stationary mass on a monotone profile, so pinning it
// is safe; the column-0 equation is implied by the others.
fn linear_solve(chain: &WalkChain) -> Result<StationaryResult> {
    let a = chain.a();
    let n = chain.n();
    let mut sub = Vec::with_capacity(n - 1);
    let mut diag = Vec::with_capacity(n);
    let mut sup = Vec::with_capacity(n - 1);
    let mut rhs = vec![0.0; n];
    for j in 1..=n {
        if j >= 2 {
            sub.push(1.0 - a[j - 1]);
        }
        if j < n {
            diag.push(-1.0);
            sup.push(a[j + 1]);
        } else {
            diag.push(-a[n]);
        }
    }
    rhs[0] = -(1.0 - a[0]);
    let tail = solve_tridiagonal(&sub, &diag, &sup, &rhs)?;
    let mut p = Vec::with_capacity(n + 1);
    p.push(1.0);
    p.extend(tail);
    let p = normalized(p);
    let residual = chain.residual(&p);
    Ok(StationaryResult { p, method: StationaryMethod::LinearSolve, residual })
}

/// Iterates `p <- p P` from the uniform distribution until the residual
/// drops to `tol`.
pub fn power_iteration(chain: &WalkChain, tol: f64, max_iters: usize) -> Result<StationaryResult> {
    let size = chain.n() + 1;
    let mut p = vec![1.0 / size as f64; size];
    let mut residual = f64::INFINITY;
    for it in 0..max_iters {
        let q = chain.apply(&p);
        residual = q.iter().zip(&p).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        p = q;
        if it % 1024 == 0 {
            p = normalized(p);
        }
        if residual <= tol {
            let p = normalized(p);
            let residual = chain.residual(&p);
            return Ok(StationaryResult { p, method: StationaryMethod::PowerIteration, residual });
        }
    }
    Err(Error::NotConverged { iterations: max_iters, residual })
}

/// Stationary distribution by the requested method.
pub fn stationary_solve(chain: &WalkChain, method: StationaryMethod) -> Result<StationaryResult> {
    match method {
        StationaryMethod::ClosedForm => stationary_closed_form(chain),
        StationaryMethod::LinearSolve => linear_solve(chain),
        StationaryMethod::PowerIteration => power_iteration(chain, POWER_TOL, POWER_MAX_ITERS),
    }
}

/// `sum_i p_i f(i/n)`.
pub fn stationary_suboptimality(stationary: &StationaryResult, f: &dyn ConvexFn1d) -> f64 {
    let n = (stationary.p.len() - 1) as f64;
    stationary.p.iter().enumerate().map(|(i, p)| p * f.value(i as f64 / n)).sum()
}

/// `(2 + 24e) / n`, the stationary suboptimality bound with `T = n^2`.
pub fn stationary_bound(n: usize) -> f64 {
    (2.0 + 24.0 * std::f64::consts::E) / n as f64
}

/// Everything the `walk` experiment emits.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WalkReport {
    pub n: usize,
    #[serde(rename = "T")]
    pub horizon: usize,
    pub profile: String,
    pub method: StationaryMethod,
    pub residual: f64,
    pub suboptimality: f64,
    pub bound_value: f64,
    pub pass: bool,
    #[serde(skip)]
    pub rows: Vec<(usize, f64, f64, f64, f64)>,
}

impl WalkReport {
    pub fn new(chain: &WalkChain, f: &dyn ConvexFn1d, profile: String, method: StationaryMethod) -> Result<Self> {
        let stationary = stationary_solve(chain, method)?;
        let n = chain.n();
        let suboptimality = stationary_suboptimality(&stationary, f);
        let bound_value = stationary_bound(n);
        let rows = (0..=n)
            .map(|i| {
                let x = i as f64 / n as f64;
                (i, x, chain.a()[i], stationary.p[i], f.value(x))
            })
            .collect();
        Ok(Self {
            n,
            horizon: n * n,
            profile,
            method,
            residual: stationary.residual,
            suboptimality,
            bound_value,
            pass: suboptimality <= bound_value,
            rows,
        })
    }

    /// Columns `i, x, a_i, p_i, f_x`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "i,x,a_i,p_i,f_x")?;
        for (i, x, a, p, fx) in &self.rows {
            writeln!(w, "{i},{},{},{},{}", f17(*x), f17(*a), f17(*p), f17(*fx))?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
