//! Helpers shared by the integration test targets.
#![allow(dead_code)]

use std::path::Path;
use std::process::{Command, Output};

use jerkrepro::integrate::{simulate, IntegratorConfig, Method};
use jerkrepro::jerk::{JerkParams, NonlinearitySign, SystemState};
use num_complex::Complex64;

/// Closed-form solution of x''' + a x'' + x = 0.
///
/// The characteristic polynomial s³ + a s² + 1 has one negative real root r
/// (found by bisection) and a complex pair λ, λ̄ (from the deflated
/// quadratic). Then x(t) = c1 e^{rt} + Re[(c2 - i c3) e^{λt}].
pub struct LinearSolution {
    r: f64,
    lambda: Complex64,
    c: [f64; 3],
}

impl LinearSolution {
    pub fn new(a: f64, ic: SystemState) -> Self {
        let f = |s: f64| s * s * s + a * s * s + 1.0;
        let (mut lo, mut hi) = (-a - 2.0, 0.0);
        assert!(f(lo) < 0.0 && f(hi) > 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let r = 0.5 * (lo + hi);
        // (s - r)(s² + p s + q) with p = a + r, q = r p.
        let p = a + r;
        let q = r * p;
        let disc = q - p * p / 4.0;
        assert!(disc > 0.0, "expected a complex pair");
        let lambda = Complex64::new(-p / 2.0, disc.sqrt());

        let rows: Vec<[f64; 3]> = (0..3)
            .map(|n| {
                let ln = lambda.powi(n);
                [r.powi(n), ln.re, ln.im]
            })
            .collect();
        let rhs = ic.to_array();
        let m = [rows[0], rows[1], rows[2]];
        let det = det3(&m);
        let mut c = [0.0; 3];
        for (j, cj) in c.iter_mut().enumerate() {
            let mut mj = m;
            for i in 0..3 {
                mj[i][j] = rhs[i];
            }
            *cj = det3(&mj) / det;
        }
        Self { r, lambda, c }
    }

    /// n-th time derivative at t (n = 0, 1, 2).
    pub fn derivative(&self, n: i32, t: f64) -> f64 {
        let w = Complex64::new(self.c[1], -self.c[2]);
        self.c[0] * self.r.powi(n) * (self.r * t).exp()
            + (w * self.lambda.powi(n) * (self.lambda * t).exp()).re
    }

    pub fn state(&self, t: f64) -> [f64; 3] {
        [
            self.derivative(0, t),
            self.derivative(1, t),
            self.derivative(2, t),
        ]
    }
}

fn det3(m: &[[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Max abs error over all channels and output samples of `method` on the
/// linear subsystem against the closed form.
pub fn linear_max_error(
    method: Method,
    h: f64,
    a: f64,
    ic: SystemState,
    t_end: f64,
    points: usize,
) -> f64 {
    let params = JerkParams::with_a(a, NonlinearitySign::Minus)
        .unwrap()
        .linearized();
    let cfg = IntegratorConfig {
        method,
        t_start: 0.0,
        t_end,
        step: h,
        initial_state: ic,
        output_points: points,
        ..IntegratorConfig::default()
    };
    let traj = simulate(&cfg, &params).unwrap();
    let exact = LinearSolution::new(a, ic);
    let mut worst = 0.0f64;
    for k in 0..traj.len() {
        let t = traj.x.time(k);
        let e = exact.state(t);
        let s = traj.state(k).to_array();
        for i in 0..3 {
            worst = worst.max((e[i] - s[i]).abs());
        }
    }
    worst
}

pub fn jerkrepro<I, S>(args: I) -> Output
where
    I: IntoIterator<Item = S>,
    S: AsRef<std::ffi::OsStr>,
{
    Command::new(env!("CARGO_BIN_EXE_jerkrepro"))
        .args(args)
        .output()
        .expect("binary runs")
}

pub fn path_str(p: &Path) -> String {
    p.to_str().unwrap().to_string()
}
