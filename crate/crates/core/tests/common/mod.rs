//! Straight-line reference implementation of the decentralized receiver,
//! written with plain vectors and no shared code, used as a test oracle.
#![allow(dead_code)]

use num_complex::Complex64 as C;

pub type Pmf = [f64; 4];

pub fn qpsk() -> [C; 4] {
    let a = std::f64::consts::FRAC_1_SQRT_2;
    [C::new(a, a), C::new(-a, a), C::new(a, -a), C::new(-a, -a)]
}

fn normalize(w: [f64; 4]) -> Pmf {
    let s: f64 = w.iter().sum();
    [w[0] / s, w[1] / s, w[2] / s, w[3] / s]
}

/// `exp(-|a - mean|²/var)` over the alphabet, normalized (max-shifted).
pub fn gaussian_pmf(mean: C, var: f64, extra: [f64; 4]) -> Pmf {
    let s = qpsk();
    let logs: Vec<f64> = (0..4).map(|i| -(s[i] - mean).norm_sqr() / var + extra[i].ln()).collect();
    let mx = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    normalize([
        (logs[0] - mx).exp(),
        (logs[1] - mx).exp(),
        (logs[2] - mx).exp(),
        (logs[3] - mx).exp(),
    ])
}

pub fn mean_var(q: &Pmf) -> (C, f64) {
    let s = qpsk();
    let mut m = C::new(0.0, 0.0);
    let mut e2 = 0.0;
    for i in 0..4 {
        m += s[i] * q[i];
        e2 += s[i].norm_sqr() * q[i];
    }
    (m, (e2 - m.norm_sqr()).max(0.0))
}

fn dotc(a: &[C], b: &[C]) -> C {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Everything one LPU visit produced.
#[derive(Debug, Clone)]
pub struct OracleVisit {
    pub sweep: usize,
    pub lpu: usize,
    pub incoming_left: Vec<Pmf>,
    pub incoming_right: Option<Vec<Pmf>>,
    pub mrc: Vec<Pmf>,
    /// Per VMP iteration: λ̄, MF (mean, variance) per user, beliefs.
    pub iterations: Vec<(f64, Vec<(C, f64)>, Vec<Pmf>)>,
    pub outgoing_left: Option<Vec<Pmf>>,
    pub outgoing_right: Option<Vec<Pmf>>,
}

/// Runs the chain with SIC disabled under the sequential schedule.
///
/// `h[m][k]` is the full channel (row-major), `y[m]` the received vector.
/// The MRC noise level is the local estimate `||y_b||² / M_b`.
pub fn reference_chain(h: &[Vec<C>], y: &[C], b_count: usize, j_iters: usize, t_sweeps: usize) -> (Vec<OracleVisit>, Vec<Vec<usize>>) {
    let m = y.len();
    let k = h[0].len();
    let mb = m / b_count;
    let uniform = [0.25; 4];
    let mut to_right = vec![vec![uniform; k]; b_count];
    let mut to_left = vec![vec![uniform; k]; b_count];
    let mut visits = Vec::new();
    let mut decisions = vec![vec![0usize; k]; b_count];

    for sweep in 0..t_sweeps {
        for b in 0..b_count {
            let left_in = if b == 0 { vec![uniform; k] } else { to_right[b - 1].clone() };
            let right_in = if b + 1 < b_count { Some(to_left[b + 1].clone()) } else { None };
            let rows = b * mb..(b + 1) * mb;
            // columns of the local block
            let cols: Vec<Vec<C>> = (0..k).map(|u| rows.clone().map(|r| h[r][u]).collect()).collect();
            let yb: Vec<C> = rows.clone().map(|r| y[r]).collect();
            let n2: Vec<f64> = cols.iter().map(|c| dotc(c, c).re).collect();
            let sigma2 = yb.iter().map(|v| v.norm_sqr()).sum::<f64>() / mb as f64;

            let mut q: Vec<Pmf> = (0..k)
                .map(|u| {
                    let xhat = dotc(&cols[u], &yb) / n2[u];
                    let mut interf = 0.0;
                    for v in 0..k {
                        if v != u {
                            interf += dotc(&cols[u], &cols[v]).norm_sqr() / n2[u];
                        }
                    }
                    gaussian_pmf(xhat, (interf + sigma2) / n2[u], [1.0; 4])
                })
                .collect();
            let mrc = q.clone();

            let mut iterations = Vec::new();
            for _ in 0..j_iters {
                let stats: Vec<(C, f64)> = q.iter().map(mean_var).collect();
                let mut z = 0.0;
                for i in 0..mb {
                    let mut r = yb[i];
                    for u in 0..k {
                        r -= cols[u][i] * stats[u].0;
                    }
                    z += r.norm_sqr();
                }
                for u in 0..k {
                    z += stats[u].1 * n2[u];
                }
                let lambda = mb as f64 / z.max(1e-12);

                let mut mf = Vec::new();
                let mut next = Vec::new();
                for u in 0..k {
                    let mut r = yb.clone();
                    for v in 0..k {
                        if v != u {
                            for i in 0..mb {
                                r[i] -= cols[v][i] * stats[v].0;
                            }
                        }
                    }
                    let mean = dotc(&cols[u], &r) / n2[u];
                    let var = 1.0 / (lambda * n2[u]);
                    mf.push((mean, var));
                    let mut prior = left_in[u];
                    if let Some(rin) = &right_in {
                        for i in 0..4 {
                            prior[i] *= rin[u][i];
                        }
                    }
                    next.push(gaussian_pmf(mean, var, prior));
                }
                q = next;
                iterations.push((lambda, mf, q.clone()));
            }

            if sweep + 1 == t_sweeps {
                for u in 0..k {
                    let mut best = 0;
                    for i in 1..4 {
                        if q[u][i] > q[u][best] {
                            best = i;
                        }
                    }
                    decisions[b][u] = best;
                }
            }

            let divide = |inc: &Vec<Pmf>| -> Vec<Pmf> {
                (0..k)
                    .map(|u| normalize([0, 1, 2, 3].map(|i| q[u][i] / inc[u][i])))
                    .collect()
            };
            let outgoing_left = (b > 0).then(|| divide(&left_in));
            let outgoing_right = right_in.as_ref().map(divide);
            if let Some(o) = &outgoing_left {
                to_left[b] = o.clone();
            }
            if let Some(o) = &outgoing_right {
                to_right[b] = o.clone();
            }
            visits.push(OracleVisit {
                sweep,
                lpu: b,
                incoming_left: left_in,
                incoming_right: right_in,
                mrc,
                iterations,
                outgoing_left,
                outgoing_right,
            });
        }
    }
    (visits, decisions)
}
