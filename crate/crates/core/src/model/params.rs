use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::math::sqrt;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Mat {
        Mat { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn uniform<R: Rng>(rows: usize, cols: usize, bound: f64, rng: &mut R) -> Mat {
        let data = (0..rows * cols).map(|_| rng.gen_range(-bound..=bound)).collect();
        Mat { rows, cols, data }
    }

    /// Glorot-uniform for a map from `cols` inputs to `rows` outputs.
    pub fn glorot<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> Mat {
        Mat::uniform(rows, cols, glorot_bound(cols, rows), rng)
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// `out += self · x`
    #[inline]
    pub fn matvec_add(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.cols);
        for (r, o) in out.iter_mut().enumerate().take(self.rows) {
            *o += dot(self.row(r), x);
        }
    }

    /// `out += selfᵀ · v`
    #[inline]
    pub fn matvec_t_add(&self, v: &[f64], out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.cols);
        for (r, &s) in v.iter().enumerate().take(self.rows) {
            if s != 0.0 {
                axpy(s, self.row(r), out);
            }
        }
    }

    /// `self += u · vᵀ`
    #[inline]
    pub fn outer_add(&mut self, u: &[f64], v: &[f64]) {
        for (r, &s) in u.iter().enumerate().take(self.rows) {
            if s != 0.0 {
                axpy(s, v, self.row_mut(r));
            }
        }
    }
}

pub fn glorot_bound(n_in: usize, n_out: usize) -> f64 {
    sqrt(6.0 / (n_in + n_out) as f64)
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    // independent lanes so the reduction vectorizes
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0; 8];
    let mut ca = a.chunks_exact(8);
    let mut cb = b.chunks_exact(8);
    for (x, y) in (&mut ca).zip(&mut cb) {
        for k in 0..8 {
            acc[k] += x[k] * y[k];
        }
    }
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    acc.iter().sum::<f64>() + tail
}

#[inline]
pub fn axpy(s: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += s * xi;
    }
}

/// Affine map `out = w · x + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub w: Mat,
    pub b: Vec<f64>,
}

impl Dense {
    pub fn zeros(n_in: usize, n_out: usize) -> Dense {
        Dense { w: Mat::zeros(n_out, n_in), b: vec![0.0; n_out] }
    }

    pub fn glorot<R: Rng>(n_in: usize, n_out: usize, rng: &mut R) -> Dense {
        Dense { w: Mat::glorot(n_out, n_in, rng), b: vec![0.0; n_out] }
    }

    pub fn n_in(&self) -> usize {
        self.w.cols
    }

    pub fn n_out(&self) -> usize {
        self.w.rows
    }
}

/// One direction of an LSTM layer. Gate rows are stacked as
/// input, forget, cell, output.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmDir {
    pub w_ih: Mat,
    pub w_hh: Mat,
    pub b: Vec<f64>,
}

impl LstmDir {
    pub fn zeros(n_in: usize, hidden: usize) -> LstmDir {
        LstmDir { w_ih: Mat::zeros(4 * hidden, n_in), w_hh: Mat::zeros(4 * hidden, hidden), b: vec![0.0; 4 * hidden] }
    }

    pub fn init<R: Rng>(n_in: usize, hidden: usize, rng: &mut R) -> LstmDir {
        let mut b = vec![0.0; 4 * hidden];
        for x in &mut b[hidden..2 * hidden] {
            *x = 1.0;
        }
        LstmDir { w_ih: Mat::glorot(4 * hidden, n_in, rng), w_hh: Mat::glorot(4 * hidden, hidden, rng), b }
    }

    pub fn hidden(&self) -> usize {
        self.w_hh.cols
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BiLayer {
    pub fwd: LstmDir,
    pub bwd: LstmDir,
}

/// Every learned array of the network. Gradients use the same type.
#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    pub token_emb: Mat,
    pub pointer_emb: Mat,
    pub sense_emb: Mat,
    pub amr_enc: Vec<BiLayer>,
    pub dep_enc: Vec<BiLayer>,
    pub sub_head: Option<Dense>,
    pub main_head: Dense,
}

impl Params {
    pub fn zeros_like(&self) -> Params {
        let mut p = self.clone();
        p.for_each_mut(|_, xs| xs.iter_mut().for_each(|x| *x = 0.0));
        p
    }

    /// Visit every parameter block with a stable name, in file order.
    pub fn for_each(&self, mut f: impl FnMut(&str, &[f64])) {
        f("token_emb", &self.token_emb.data);
        f("pointer_emb", &self.pointer_emb.data);
        f("sense_emb", &self.sense_emb.data);
        for (enc, layers) in [("amr_enc", &self.amr_enc), ("dep_enc", &self.dep_enc)] {
            for (l, layer) in layers.iter().enumerate() {
                for (d, dir) in [("fwd", &layer.fwd), ("bwd", &layer.bwd)] {
                    f(&format!("{enc}.l{l}.{d}.w_ih"), &dir.w_ih.data);
                    f(&format!("{enc}.l{l}.{d}.w_hh"), &dir.w_hh.data);
                    f(&format!("{enc}.l{l}.{d}.b"), &dir.b);
                }
            }
        }
        if let Some(h) = &self.sub_head {
            f("sub_head.w", &h.w.data);
            f("sub_head.b", &h.b);
        }
        f("main_head.w", &self.main_head.w.data);
        f("main_head.b", &self.main_head.b);
    }

    pub fn for_each_mut(&mut self, mut f: impl FnMut(&str, &mut [f64])) {
        f("token_emb", &mut self.token_emb.data);
        f("pointer_emb", &mut self.pointer_emb.data);
        f("sense_emb", &mut self.sense_emb.data);
        for (enc, layers) in [("amr_enc", &mut self.amr_enc), ("dep_enc", &mut self.dep_enc)] {
            for (l, layer) in layers.iter_mut().enumerate() {
                for (d, dir) in [("fwd", &mut layer.fwd), ("bwd", &mut layer.bwd)] {
                    f(&format!("{enc}.l{l}.{d}.w_ih"), &mut dir.w_ih.data);
                    f(&format!("{enc}.l{l}.{d}.w_hh"), &mut dir.w_hh.data);
                    f(&format!("{enc}.l{l}.{d}.b"), &mut dir.b);
                }
            }
        }
        if let Some(h) = &mut self.sub_head {
            f("sub_head.w", &mut h.w.data);
            f("sub_head.b", &mut h.b);
        }
        f("main_head.w", &mut self.main_head.w.data);
        f("main_head.b", &mut self.main_head.b);
    }

    /// `(name, shape)` of every block, in visiting order.
    pub fn shapes(&self) -> Vec<(String, Vec<usize>)> {
        let mut out = Vec::new();
        let mut push = |name: &str, shape: Vec<usize>| out.push((String::from(name), shape));
        push("token_emb", vec![self.token_emb.rows, self.token_emb.cols]);
        push("pointer_emb", vec![self.pointer_emb.rows, self.pointer_emb.cols]);
        push("sense_emb", vec![self.sense_emb.rows, self.sense_emb.cols]);
        for (enc, layers) in [("amr_enc", &self.amr_enc), ("dep_enc", &self.dep_enc)] {
            for (l, layer) in layers.iter().enumerate() {
                for (d, dir) in [("fwd", &layer.fwd), ("bwd", &layer.bwd)] {
                    push(&format!("{enc}.l{l}.{d}.w_ih"), vec![dir.w_ih.rows, dir.w_ih.cols]);
                    push(&format!("{enc}.l{l}.{d}.w_hh"), vec![dir.w_hh.rows, dir.w_hh.cols]);
                    push(&format!("{enc}.l{l}.{d}.b"), vec![dir.b.len()]);
                }
            }
        }
        if let Some(h) = &self.sub_head {
            push("sub_head.w", vec![h.w.rows, h.w.cols]);
            push("sub_head.b", vec![h.b.len()]);
        }
        push("main_head.w", vec![self.main_head.w.rows, self.main_head.w.cols]);
        push("main_head.b", vec![self.main_head.b.len()]);
        out
    }

    pub fn len(&self) -> usize {
        let mut n = 0;
        self.for_each(|_, xs| n += xs.len());
        n
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `self += s · other`
    pub fn add_scaled(&mut self, s: f64, other: &Params) {
        let mut src = Vec::new();
        other.for_each(|_, xs| src.push(xs.to_vec()));
        let mut it = src.into_iter();
        self.for_each_mut(|_, xs| axpy(s, &it.next().unwrap(), xs));
    }

    /// Round every value to the nearest `f32`, the precision models are
    /// stored at.
    pub fn quantize(&mut self) {
        self.for_each_mut(|_, xs| xs.iter_mut().for_each(|x| *x = *x as f32 as f64));
    }

    /// Reset the PAD rows (id 0) of the embedding tables to zero.
    pub fn zero_pad_rows(&mut self) {
        for m in [&mut self.token_emb, &mut self.pointer_emb, &mut self.sense_emb] {
            m.row_mut(0).iter_mut().for_each(|x| *x = 0.0);
        }
    }

    /// Name of the first block holding a NaN or infinity.
    pub fn first_non_finite(&self) -> Option<String> {
        let mut bad = None;
        self.for_each(|name, xs| {
            if bad.is_none() && xs.iter().any(|x| !x.is_finite()) {
                bad = Some(String::from(name));
            }
        });
        bad
    }
}
