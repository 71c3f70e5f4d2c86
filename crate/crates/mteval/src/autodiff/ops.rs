//! Differentiable operations, recorded as tape methods.
//!
//! Each operation validates shapes, computes the forward values, and (when
//! the tape records and a parent requires gradients) pushes one backward
//! closure. Backward closures capture cloned forward values, never live
//! borrows, so gradient accumulation cannot alias.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{GradMap, Tape, Tensor};
use crate::error::{Error, Result};

/// Pointwise binary operation selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElementwiseKind {
    Add,
    Sub,
    Mul,
}

fn check_same_shape(name: &str, a: &Tensor, b: &Tensor) -> Result<()> {
    if a.shape() != b.shape() {
        let (ar, ac) = a.shape();
        let (br, bc) = b.shape();
        return Err(Error::dim(format!(
            "{name}: {ar}x{ac} vs {br}x{bc}"
        )));
    }
    Ok(())
}

impl Tape {
    /// Matrix product `a (r×k) × b (k×c) -> r×c`.
    pub fn matmul(&self, a: &Tensor, b: &Tensor) -> Result<Tensor> {
        let (ar, ak) = a.shape();
        let (bk, bc) = b.shape();
        if ak != bk {
            return Err(Error::dim(format!("matmul: {ar}x{ak} times {bk}x{bc}")));
        }
        let av = a.values();
        let bv = b.values();
        let mut out = vec![0.0; ar * bc];
        for i in 0..ar {
            for k in 0..ak {
                let aik = av[i * ak + k];
                if aik == 0.0 {
                    continue;
                }
                for j in 0..bc {
                    out[i * bc + j] += aik * bv[k * bc + j];
                }
            }
        }
        let out = self.output_like(ar, bc, out, &[a, b]);
        let (a2, b2, o2) = (a.clone(), b.clone(), out.clone());
        self.record(
            &out,
            Box::new(move |grads: &mut GradMap| {
                let Some(g) = grads.take(&o2) else { return };
                // dA = G · Bᵀ
                let mut da = vec![0.0; ar * ak];
                for i in 0..ar {
                    for k in 0..ak {
                        let mut s = 0.0;
                        for j in 0..bc {
                            s += g[i * bc + j] * bv[k * bc + j];
                        }
                        da[i * ak + k] = s;
                    }
                }
                grads.add(&a2, da);
                // dB = Aᵀ · G
                let mut db = vec![0.0; ak * bc];
                for k in 0..ak {
                    for i in 0..ar {
                        let aik = av[i * ak + k];
                        if aik == 0.0 {
                            continue;
                        }
                        for j in 0..bc {
                            db[k * bc + j] += aik * g[i * bc + j];
                        }
                    }
                }
                grads.add(&b2, db);
            }),
        );
        Ok(out)
    }

    /// Pointwise add/sub/mul of same-shape tensors.
    pub fn elementwise(&self, a: &Tensor, b: &Tensor, kind: ElementwiseKind) -> Result<Tensor> {
        check_same_shape("elementwise", a, b)?;
        let (r, c) = a.shape();
        let av = a.values();
        let bv = b.values();
        let vals: Vec<f64> = match kind {
            ElementwiseKind::Add => av.iter().zip(&bv).map(|(x, y)| x + y).collect(),
            ElementwiseKind::Sub => av.iter().zip(&bv).map(|(x, y)| x - y).collect(),
            ElementwiseKind::Mul => av.iter().zip(&bv).map(|(x, y)| x * y).collect(),
        };
        let out = self.output_like(r, c, vals, &[a, b]);
        let (a2, b2, o2) = (a.clone(), b.clone(), out.clone());
        self.record(
            &out,
            Box::new(move |grads| {
                let Some(g) = grads.take(&o2) else { return };
                match kind {
                    ElementwiseKind::Add => {
                        grads.add(&a2, g.clone());
                        grads.add(&b2, g);
                    }
                    ElementwiseKind::Sub => {
                        grads.add(&a2, g.clone());
                        grads.add(&b2, g.iter().map(|x| -x).collect());
                    }
                    ElementwiseKind::Mul => {
                        grads.add(&a2, g.iter().zip(&bv).map(|(gi, bi)| gi * bi).collect());
                        grads.add(&b2, g.iter().zip(&av).map(|(gi, ai)| gi * ai).collect());
                    }
                }
            }),
        );
        Ok(out)
    }

    pub fn add(&self, a: &Tensor, b: &Tensor) -> Result<Tensor> {
        self.elementwise(a, b, ElementwiseKind::Add)
    }

    pub fn sub(&self, a: &Tensor, b: &Tensor) -> Result<Tensor> {
        self.elementwise(a, b, ElementwiseKind::Sub)
    }

    pub fn mul(&self, a: &Tensor, b: &Tensor) -> Result<Tensor> {
        self.elementwise(a, b, ElementwiseKind::Mul)
    }

    /// Pointwise absolute value; the subgradient at 0 is 0.
    pub fn abs(&self, a: &Tensor) -> Result<Tensor> {
        let (r, c) = a.shape();
        let av = a.values();
        let out = self.output_like(r, c, av.iter().map(|x| x.abs()).collect(), &[a]);
        let (a2, o2) = (a.clone(), out.clone());
        self.record(
            &out,
            Box::new(move |grads| {
                let Some(g) = grads.take(&o2) else { return };
                let da = g
                    .iter()
                    .zip(&av)
                    .map(|(gi, x)| {
                        if *x > 0.0 {
                            *gi
                        } else if *x < 0.0 {
                            -*gi
                        } else {
                            0.0
                        }
                    })
                    .collect();
                grads.add(&a2, da);
            }),
        );
        Ok(out)
    }

    /// Softmax over a row vector, with optional boolean keep-mask.
    ///
    /// Masked entries behave as weight −∞: their output is exactly 0 and no
    /// gradient flows through them. Stabilized by max-subtraction.
    pub fn softmax_masked(&self, a: &Tensor, mask: Option<&[bool]>) -> Result<Tensor> {
        let (r, n) = a.shape();
        if r != 1 {
            return Err(Error::dim(format!("softmax expects a row vector, got {r}x{n}")));
        }
        if let Some(m) = mask {
            if m.len() != n {
                return Err(Error::dim(format!(
                    "softmax mask length {} vs vector length {n}",
                    m.len()
                )));
            }
            if !m.iter().any(|&keep| keep) {
                return Err(Error::AllMasked);
            }
        }
        let av = a.values();
        let keep = |i: usize| mask.map_or(true, |m| m[i]);
        let max = (0..n)
            .filter(|&i| keep(i))
            .map(|i| av[i])
            .fold(f64::NEG_INFINITY, f64::max);
        let mut vals = vec![0.0; n];
        let mut denom = 0.0;
        for i in 0..n {
            if keep(i) {
                vals[i] = (av[i] - max).exp();
                denom += vals[i];
            }
        }
        for v in &mut vals {
            *v /= denom;
        }
        let out = self.output_like(1, n, vals.clone(), &[a]);
        let (a2, o2) = (a.clone(), out.clone());
        self.record(
            &out,
            Box::new(move |grads| {
                let Some(g) = grads.take(&o2) else { return };
                let dot: f64 = g.iter().zip(&vals).map(|(gi, si)| gi * si).sum();
                let da = g
                    .iter()
                    .zip(&vals)
                    .map(|(gi, si)| si * (gi - dot))
                    .collect();
                grads.add(&a2, da);
            }),
        );
        Ok(out)
    }

    /// Softmax applied to each row of an r×c matrix independently.
    pub fn softmax_rows(&self, a: &Tensor) -> Result<Tensor> {
        let (r, c) = a.shape();
        if c == 0 {
            return Err(Error::dim("softmax_rows on zero-width matrix"));
        }
        let av = a.values();
        let mut vals = vec![0.0; r * c];
        for i in 0..r {
            let row = &av[i * c..(i + 1) * c];
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut denom = 0.0;
            for j in 0..c {
                let e = (row[j] - max).exp();
                vals[i * c + j] = e;
                denom += e;
            }
            for j in 0..c {
                vals[i * c + j] /= denom;
            }
        }
        let out = self.output_like(r, c, vals.clone(), &[a]);
        let (a2, o2) = (a.clone(), out.clone());
        self.record(
            &out,
            Box::new(move |grads| {
                let Some(g) = grads.take(&o2) else { return };
                let mut da = vec![0.0; r * c];
                for i in 0..r {
                    let base = i * c;
                    let dot: f64 = (0..c).map(|j| g[base + j] * vals[base + j]).sum();
                    for j in 0..c {
                        da[base + j] = vals[base + j] * (g[base + j] - dot);
                    }
                }
                grads.add(&a2, da);
            }),
        );
        Ok(out)
    }

    /// Mean of all entries, as a 1x1 tensor.
    pub fn reduce_mean(&self, a: &Tensor) -> Result<Tensor> {
        let (r, c) = a.shape();
        let n = r * c;
        if n == 0 {
            return Err(Error::dim("reduce_mean of empty tensor"));
        }
        let mean = a.values().iter().sum::<f64>() / n as f64;
        let out = self.output_like(1, 1, vec![mean], &[a]);
        let (a2, o2) = (a.clone(), out.clone());
        self.record(
            &out,
            Box::new(move |grads| {
                let Some(g) = grads.take(&o2) else { return };
                grads.add(&a2, vec![g[0] / n as f64; n]);
            }),
        );
        Ok(out)
    }

    /// Column-wise mean over rows: n×d → 1×d.
    pub fn mean_rows(&self, a: &Tensor) -> Result<Tensor> {
        let (r, c) = a.shape();
        if r == 0 {
            return Err(Error::dim("mean_rows of empty tensor"));
        }
        let av = a.values();
        let mut vals = vec![0.0; c];
        for i in 0..r {
            for j in 0..c {
                vals[j] += av[i * c + j];
            }
        }
        for v in &mut vals {
            *v /= r as f64;
        }
        let out = self.output_like(1, c, vals, &[a]);
        let (a2, o2) = (a.clone(), out.clone());
        self.record(
            &out,
            Box::new(move |grads| {
                let Some(g) = grads.take(&o2) else { return };
                let mut da = vec![0.0; r * c];
                for i in 0..r {
                    for j in 0..c {
                        da[i * c + j] = g[j] / r as f64;
                    }
                }
                grads.add(&a2, da);
            }),
        );
        Ok(out)
    }

    /// Concatenates tensors with equal row counts along columns.
    pub fn concat_cols(&self, parts: &[&Tensor]) -> Result<Tensor> {
        if parts.is_empty() {
            return Err(Error::dim("concat of zero tensors"));
        }
        let r = parts[0].rows();
        if parts.iter().any(|p| p.rows() != r) {
            return Err(Error::dim("concat: row counts differ"));
        }
        let widths: Vec<usize> = parts.iter().map(|p| p.cols()).collect();
        let total: usize = widths.iter().sum();
        let values: Vec<Vec<f64>> = parts.iter().map(|p| p.values()).collect();
        let mut vals = vec![0.0; r * total];
        for i in 0..r {
            let mut off = 0;
            for (p, w) in values.iter().zip(&widths) {
                vals[i * total + off..i * total + off + w].copy_from_slice(&p[i * w..(i + 1) * w]);
                off += w;
            }
        }
        let out = self.output_like(r, total, vals, parts);
        let parents: Vec<Tensor> = parts.iter().map(|p| (*p).clone()).collect();
        let o2 = out.clone();
        let widths2 = widths.clone();
        self.record(
            &out,
            Box::new(move |grads| {
                let Some(g) = grads.take(&o2) else { return };
                let mut off = 0;
                for (p, w) in parents.iter().zip(&widths2) {
                    let mut dp = vec![0.0; r * w];
                    for i in 0..r {
                        dp[i * w..(i + 1) * w]
                            .copy_from_slice(&g[i * total + off..i * total + off + w]);
                    }
                    grads.add(p, dp);
                    off += w;
                }
            }),
        );
        Ok(out)
    }

    /// Column slice `[start, start+len)`.
    pub fn slice_cols(&self, a: &Tensor, start: usize, len: usize) -> Result<Tensor> {
        let (r, c) = a.shape();
        if start + len > c {
            return Err(Error::dim(format!(
                "slice [{start}, {}) out of {c} columns",
                start + len
            )));
        }
        let av = a.values();
        let mut vals = vec![0.0; r * len];
        for i in 0..r {
            vals[i * len..(i + 1) * len].copy_from_slice(&av[i * c + start..i * c + start + len]);
        }
        let out = self.output_like(r, len, vals, &[a]);
        let (a2, o2) = (a.clone(), out.clone());
        self.record(
            &out,
            Box::new(move |grads| {
                let Some(g) = grads.take(&o2) else { return };
                let mut da = vec![0.0; r * c];
                for i in 0..r {
                    da[i * c + start..i * c + start + len]
                        .copy_from_slice(&g[i * len..(i + 1) * len]);
                }
                grads.add(&a2, da);
            }),
        );
        Ok(out)
    }

    /// Pointwise hyperbolic tangent.
    pub fn tanh(&self, a: &Tensor) -> Result<Tensor> {
        let (r, c) = a.shape();
        let vals: Vec<f64> = a.values().iter().map(|x| x.tanh()).collect();
        let out = self.output_like(r, c, vals.clone(), &[a]);
        let (a2, o2) = (a.clone(), out.clone());
        self.record(
            &out,
            Box::new(move |grads| {
                let Some(g) = grads.take(&o2) else { return };
                let da = g
                    .iter()
                    .zip(&vals)
                    .map(|(gi, yi)| gi * (1.0 - yi * yi))
                    .collect();
                grads.add(&a2, da);
            }),
        );
        Ok(out)
    }

    /// Pointwise max(x, 0); the subgradient at 0 is 0.
    pub fn relu_max0(&self, a: &Tensor) -> Result<Tensor> {
        let (r, c) = a.shape();
        let av = a.values();
        let out = self.output_like(r, c, av.iter().map(|x| x.max(0.0)).collect(), &[a]);
        let (a2, o2) = (a.clone(), out.clone());
        self.record(
            &out,
            Box::new(move |grads| {
                let Some(g) = grads.take(&o2) else { return };
                let da = g
                    .iter()
                    .zip(&av)
                    .map(|(gi, x)| if *x > 0.0 { *gi } else { 0.0 })
                    .collect();
                grads.add(&a2, da);
            }),
        );
        Ok(out)
    }

    /// Euclidean distance between two equal-length row vectors, as 1x1.
    /// The gradient at coincident points is defined as 0.
    pub fn euclid(&self, u: &Tensor, v: &Tensor) -> Result<Tensor> {
        check_same_shape("euclid", u, v)?;
        if u.rows() != 1 {
            return Err(Error::dim("euclid expects row vectors"));
        }
        let uv = u.values();
        let vv = v.values();
        let dist = uv
            .iter()
            .zip(&vv)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let out = self.output_like(1, 1, vec![dist], &[u, v]);
        let (u2, v2, o2) = (u.clone(), v.clone(), out.clone());
        self.record(
            &out,
            Box::new(move |grads| {
                let Some(g) = grads.take(&o2) else { return };
                if dist == 0.0 {
                    let zeros = vec![0.0; uv.len()];
                    grads.add(&u2, zeros.clone());
                    grads.add(&v2, zeros);
                    return;
                }
                let scale = g[0] / dist;
                let du: Vec<f64> = uv.iter().zip(&vv).map(|(a, b)| scale * (a - b)).collect();
                let dv: Vec<f64> = du.iter().map(|x| -x).collect();
                grads.add(&u2, du);
                grads.add(&v2, dv);
            }),
        );
        Ok(out)
    }

    /// Transpose.
    pub fn transpose(&self, a: &Tensor) -> Result<Tensor> {
        let (r, c) = a.shape();
        let av = a.values();
        let mut vals = vec![0.0; r * c];
        for i in 0..r {
            for j in 0..c {
                vals[j * r + i] = av[i * c + j];
            }
        }
        let out = self.output_like(c, r, vals, &[a]);
        let (a2, o2) = (a.clone(), out.clone());
        self.record(
            &out,
            Box::new(move |grads| {
                let Some(g) = grads.take(&o2) else { return };
                let mut da = vec![0.0; r * c];
                for i in 0..c {
                    for j in 0..r {
                        da[j * c + i] = g[i * r + j];
                    }
                }
                grads.add(&a2, da);
            }),
        );
        Ok(out)
    }

    /// Multiplies every entry by a compile-time constant.
    pub fn scale_const(&self, a: &Tensor, factor: f64) -> Result<Tensor> {
        let (r, c) = a.shape();
        let vals = a.values().iter().map(|x| x * factor).collect();
        let out = self.output_like(r, c, vals, &[a]);
        let (a2, o2) = (a.clone(), out.clone());
        self.record(
            &out,
            Box::new(move |grads| {
                let Some(g) = grads.take(&o2) else { return };
                grads.add(&a2, g.iter().map(|gi| gi * factor).collect());
            }),
        );
        Ok(out)
    }

    /// Multiplies a tensor by a trainable 1x1 scalar tensor.
    pub fn scale_by(&self, a: &Tensor, s: &Tensor) -> Result<Tensor> {
        if s.shape() != (1, 1) {
            let (r, c) = s.shape();
            return Err(Error::dim(format!("scale_by expects 1x1 scalar, got {r}x{c}")));
        }
        let (r, c) = a.shape();
        let av = a.values();
        let sv = s.item();
        let out = self.output_like(r, c, av.iter().map(|x| x * sv).collect(), &[a, s]);
        let (a2, s2, o2) = (a.clone(), s.clone(), out.clone());
        self.record(
            &out,
            Box::new(move |grads| {
                let Some(g) = grads.take(&o2) else { return };
                grads.add(&a2, g.iter().map(|gi| gi * sv).collect());
                let ds: f64 = g.iter().zip(&av).map(|(gi, ai)| gi * ai).sum();
                grads.add(&s2, vec![ds]);
            }),
        );
        Ok(out)
    }

    /// Inverted dropout: keeps each entry with probability `1 - p`, scaling
    /// kept entries by `1/(1-p)` so inference needs no rescaling.
    pub fn dropout(&self, a: &Tensor, p: f64, rng: &mut ChaCha8Rng) -> Result<Tensor> {
        if !(0.0..1.0).contains(&p) {
            return Err(Error::Config(format!("dropout probability {p} outside [0,1)")));
        }
        if p == 0.0 {
            return Ok(a.clone());
        }
        let (r, c) = a.shape();
        let keep = 1.0 - p;
        let mask: Vec<f64> = (0..r * c)
            .map(|_| if rng.gen::<f64>() < p { 0.0 } else { 1.0 / keep })
            .collect();
        let vals = a.values().iter().zip(&mask).map(|(x, m)| x * m).collect();
        let out = self.output_like(r, c, vals, &[a]);
        let (a2, o2) = (a.clone(), out.clone());
        self.record(
            &out,
            Box::new(move |grads| {
                let Some(g) = grads.take(&o2) else { return };
                grads.add(&a2, g.iter().zip(&mask).map(|(gi, m)| gi * m).collect());
            }),
        );
        Ok(out)
    }

    /// Row-wise layer normalization with learned gain and bias (both 1×d).
    pub fn layer_norm(&self, x: &Tensor, gain: &Tensor, bias: &Tensor, eps: f64) -> Result<Tensor> {
        let (r, c) = x.shape();
        if gain.shape() != (1, c) || bias.shape() != (1, c) {
            return Err(Error::dim(format!(
                "layer_norm gain/bias must be 1x{c}"
            )));
        }
        let xv = x.values();
        let gv = gain.values();
        let bv = bias.values();
        let mut vals = vec![0.0; r * c];
        let mut xhat = vec![0.0; r * c];
        let mut inv_sigma = vec![0.0; r];
        for i in 0..r {
            let row = &xv[i * c..(i + 1) * c];
            let mean = row.iter().sum::<f64>() / c as f64;
            let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / c as f64;
            let inv = 1.0 / (var + eps).sqrt();
            inv_sigma[i] = inv;
            for j in 0..c {
                let h = (row[j] - mean) * inv;
                xhat[i * c + j] = h;
                vals[i * c + j] = gv[j] * h + bv[j];
            }
        }
        let out = self.output_like(r, c, vals, &[x, gain, bias]);
        let (x2, g2t, b2, o2) = (x.clone(), gain.clone(), bias.clone(), out.clone());
        self.record(
            &out,
            Box::new(move |grads| {
                let Some(g) = grads.take(&o2) else { return };
                let mut dgain = vec![0.0; c];
                let mut dbias = vec![0.0; c];
                let mut dx = vec![0.0; r * c];
                for i in 0..r {
                    let base = i * c;
                    let mut mean_dh = 0.0;
                    let mut mean_dh_h = 0.0;
                    for j in 0..c {
                        let go = g[base + j];
                        let h = xhat[base + j];
                        dgain[j] += go * h;
                        dbias[j] += go;
                        let dh = go * gv[j];
                        mean_dh += dh;
                        mean_dh_h += dh * h;
                    }
                    mean_dh /= c as f64;
                    mean_dh_h /= c as f64;
                    for j in 0..c {
                        let dh = g[base + j] * gv[j];
                        let h = xhat[base + j];
                        dx[base + j] = inv_sigma[i] * (dh - mean_dh - h * mean_dh_h);
                    }
                }
                grads.add(&x2, dx);
                grads.add(&g2t, dgain);
                grads.add(&b2, dbias);
            }),
        );
        Ok(out)
    }

    /// Gathers rows of an embedding table: ids index into a vocab×d table,
    /// producing n×d. Backward scatter-adds into the table.
    pub fn embed(&self, table: &Tensor, ids: &[usize]) -> Result<Tensor> {
        let (vocab, d) = table.shape();
        if let Some(&bad) = ids.iter().find(|&&id| id >= vocab) {
            return Err(Error::dim(format!(
                "token id {bad} outside vocabulary of {vocab}"
            )));
        }
        if ids.is_empty() {
            return Err(Error::EmptyInput("embed of empty id list".into()));
        }
        let tv = table.values();
        let n = ids.len();
        let mut vals = vec![0.0; n * d];
        for (i, &id) in ids.iter().enumerate() {
            vals[i * d..(i + 1) * d].copy_from_slice(&tv[id * d..(id + 1) * d]);
        }
        let out = self.output_like(n, d, vals, &[table]);
        let (t2, o2) = (table.clone(), out.clone());
        let ids2 = ids.to_vec();
        self.record(
            &out,
            Box::new(move |grads| {
                let Some(g) = grads.take(&o2) else { return };
                let mut dt = vec![0.0; vocab * d];
                for (i, &id) in ids2.iter().enumerate() {
                    for j in 0..d {
                        dt[id * d + j] += g[i * d + j];
                    }
                }
                grads.add(&t2, dt);
            }),
        );
        Ok(out)
    }
}
