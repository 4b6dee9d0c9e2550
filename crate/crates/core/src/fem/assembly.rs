use super::layout::BlockLayout;
use crate::ad::{Jet, Scalar};
use crate::error::Result;
use crate::exec::Execution;

/// Element-level contribution to a nonlinear residual.
///
/// `gather` exposes the `N` local unknowns of element `e`: their global
/// column (`None` for prescribed values) and current value. `eval` adds
/// `(row, value)` pairs to `out`; evaluated with [`Jet`] arguments it yields
/// the exact local Jacobian.
pub trait Kernel<const N: usize>: Sync {
    fn len(&self) -> usize;
    fn gather(&self, e: usize, state: &[f64]) -> ([Option<usize>; N], [f64; N]);
    fn eval<S: Scalar>(&self, e: usize, x: &[S; N], out: &mut Vec<(usize, S)>) -> Result<()>;
}

/// Assembled residual and (optionally) Jacobian triplets, duplicates summed later.
#[derive(Clone, Debug, Default)]
pub struct Assembly {
    pub residual: Vec<f64>,
    pub triplets: Vec<(usize, usize, f64)>,
}

impl Assembly {
    pub fn new(n: usize) -> Self {
        Assembly { residual: vec![0.0; n], triplets: Vec::new() }
    }

    pub fn norm(&self) -> f64 {
        self.residual.iter().map(|r| r * r).sum::<f64>().sqrt()
    }

    /// Dense matrix-vector product with the assembled Jacobian.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.residual.len()];
        for &(i, j, a) in &self.triplets {
            y[i] += a * v[j];
        }
        y
    }
}

/// A nonlinear system over a block layout.
pub trait WeakForm: Sync {
    fn layout(&self) -> &BlockLayout;
    /// Residual at `state`, plus the Jacobian when `jacobian` is set.
    fn assemble(&self, state: &[f64], jacobian: bool, exec: Execution) -> Result<Assembly>;
}

const BATCH: usize = 64;

type Batch = (Vec<(usize, f64)>, Vec<(usize, usize, f64)>);

/// Adds the contributions of every element of `kernel` to `acc`.
/// Batches are evaluated in parallel and merged in element order, so the
/// result does not depend on the execution mode.
pub fn assemble<K: Kernel<N>, const N: usize>(
    kernel: &K,
    state: &[f64],
    jacobian: bool,
    exec: Execution,
    acc: &mut Assembly,
) -> Result<()> {
    let n = kernel.len();
    let batches = n.div_ceil(BATCH);
    let parts: Vec<Result<Batch>> = exec.map(batches, |b| {
        let mut res = Vec::new();
        let mut trip = Vec::new();
        for e in b * BATCH..((b + 1) * BATCH).min(n) {
            let (cols, vals) = kernel.gather(e, state);
            if jacobian {
                let x = Jet::<N>::seed(&vals);
                let mut out: Vec<(usize, Jet<N>)> = Vec::new();
                kernel.eval(e, &x, &mut out)?;
                for (row, v) in out {
                    res.push((row, v.v));
                    for (k, c) in cols.iter().enumerate() {
                        if let Some(c) = c {
                            if v.d[k] != 0.0 {
                                trip.push((row, *c, v.d[k]));
                            }
                        }
                    }
                }
            } else {
                let mut out: Vec<(usize, f64)> = Vec::new();
                kernel.eval(e, &vals, &mut out)?;
                res.extend(out);
            }
        }
        Ok((res, trip))
    });
    for p in parts {
        let (res, trip) = p?;
        for (row, v) in res {
            acc.residual[row] += v;
        }
        acc.triplets.extend(trip);
    }
    Ok(())
}

/// Worst relative error between assembled Jacobian columns and central
/// differences of the residual (step `1e-6`) over `columns` random columns.
pub fn jacobian_fd_error<F: WeakForm + ?Sized>(
    form: &F,
    state: &[f64],
    columns: usize,
    seed: u64,
    exec: Execution,
) -> Result<f64> {
    use rand::{Rng, SeedableRng};
    let n = form.layout().len();
    let a = form.assemble(state, true, exec)?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let h = 1e-6;
    let mut worst = 0.0f64;
    for _ in 0..columns.min(n) {
        let j = rng.gen_range(0..n);
        let mut col = vec![0.0; n];
        for &(r, c, v) in &a.triplets {
            if c == j {
                col[r] += v;
            }
        }
        let mut x = state.to_vec();
        x[j] = state[j] + h;
        let rp = form.assemble(&x, false, exec)?.residual;
        x[j] = state[j] - h;
        let rm = form.assemble(&x, false, exec)?.residual;
        let (mut diff, mut scale) = (0.0f64, 0.0f64);
        for i in 0..n {
            let fd = (rp[i] - rm[i]) / (2.0 * h);
            diff = diff.max((fd - col[i]).abs());
            scale = scale.max(col[i].abs()).max(fd.abs());
        }
        if scale > 0.0 {
            worst = worst.max(diff / scale);
        }
    }
    Ok(worst)
}
