use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::params::{BiLayer, LstmDir, Mat, Params};
use super::Model;
use crate::math::{sigmoid, tanh};
use crate::metrics::{MAIN_DIM, SCORE_DIM};
use crate::preprocess::EncodedInput;
use crate::{Error, Result};

/// Gradients share the parameter layout.
pub type Grads = Params;

struct DirCache {
    /// Post-activation gates, `T × 4H`.
    gates: Vec<f64>,
    c: Vec<f64>,
    tc: Vec<f64>,
    h: Vec<f64>,
}

pub(crate) struct LayerCache {
    input: Mat,
    fwd: DirCache,
    bwd: DirCache,
    output: Mat,
}

pub(crate) struct Forward {
    amr_ids: StreamIds,
    dep_ids: StreamIds,
    amr_layers: Vec<LayerCache>,
    dep_layers: Vec<LayerCache>,
    va: Vec<f64>,
    vd: Vec<f64>,
    comb: Vec<f64>,
    sub: Option<Vec<f64>>,
    pub(crate) out: [f64; SCORE_DIM],
}

struct StreamIds {
    tokens: Vec<u32>,
    pointers: Vec<u32>,
    senses: Option<Vec<u32>>,
}

fn check_ids(ids: &[u32], table: &Mat, what: &str) -> Result<()> {
    match ids.iter().find(|&&i| i as usize >= table.rows) {
        Some(i) => Err(Error::Shape(format!("{what} id {i} outside table of {} rows", table.rows))),
        None => Ok(()),
    }
}

/// Sum of token, pointer (when enabled) and sense rows for the first `len`
/// positions.
pub(crate) fn embed(model: &Model, tokens: &[u32], pointers: &[u32], senses: Option<&[u32]>, len: usize) -> Result<Mat> {
    let p = &model.params;
    if tokens.len() < len || pointers.len() < len || senses.is_some_and(|s| s.len() < len) {
        return Err(Error::Shape(format!("stream shorter than its length {len}")));
    }
    check_ids(&tokens[..len], &p.token_emb, "token")?;
    if model.config.use_pointers {
        check_ids(&pointers[..len], &p.pointer_emb, "pointer")?;
    }
    if let Some(s) = senses {
        check_ids(&s[..len], &p.sense_emb, "sense")?;
    }
    let e = model.config.embed_dim;
    let mut out = Mat::zeros(len, e);
    for t in 0..len {
        let row = out.row_mut(t);
        add(row, p.token_emb.row(tokens[t] as usize));
        if model.config.use_pointers {
            add(row, p.pointer_emb.row(pointers[t] as usize));
        }
        if let Some(s) = senses {
            add(row, p.sense_emb.row(s[t] as usize));
        }
    }
    Ok(out)
}

#[inline]
fn add(y: &mut [f64], x: &[f64]) {
    y.iter_mut().zip(x).for_each(|(a, b)| *a += b);
}

fn dir_forward(p: &LstmDir, x: &Mat, len: usize, reverse: bool) -> DirCache {
    let h = p.hidden();
    let mut cache = DirCache { gates: vec![0.0; len * 4 * h], c: vec![0.0; len * h], tc: vec![0.0; len * h], h: vec![0.0; len * h] };
    let mut prev: Option<usize> = None;
    for s in 0..len {
        let t = if reverse { len - 1 - s } else { s };
        let z = &mut cache.gates[t * 4 * h..(t + 1) * 4 * h];
        z.copy_from_slice(&p.b);
        p.w_ih.matvec_add(x.row(t), z);
        if let Some(tp) = prev {
            p.w_hh.matvec_add(&cache.h[tp * h..(tp + 1) * h], z);
        }
        for j in 0..h {
            let i = sigmoid(z[j]);
            let f = sigmoid(z[h + j]);
            let g = tanh(z[2 * h + j]);
            let o = sigmoid(z[3 * h + j]);
            z[j] = i;
            z[h + j] = f;
            z[2 * h + j] = g;
            z[3 * h + j] = o;
            let c_prev = prev.map_or(0.0, |tp| cache.c[tp * h + j]);
            let c = f * c_prev + i * g;
            let tc = tanh(c);
            cache.c[t * h + j] = c;
            cache.tc[t * h + j] = tc;
            cache.h[t * h + j] = o * tc;
        }
        prev = Some(t);
    }
    cache
}

/// Accumulates parameter gradients into `g` and input gradients into `dx`.
/// `dh_out` is the gradient on this direction's hidden states, `T × H`.
fn dir_backward(p: &LstmDir, x: &Mat, cache: &DirCache, dh_out: &[f64], reverse: bool, g: &mut LstmDir, dx: &mut Mat) {
    let h = p.hidden();
    let len = x.rows;
    let mut dh_next = vec![0.0; h];
    let mut dc_next = vec![0.0; h];
    let mut dz = vec![0.0; 4 * h];
    for s in (0..len).rev() {
        let t = if reverse { len - 1 - s } else { s };
        let prev = (s > 0).then(|| if reverse { len - s } else { s - 1 });
        let gates = &cache.gates[t * 4 * h..(t + 1) * 4 * h];
        for j in 0..h {
            let (i, f, gg, o) = (gates[j], gates[h + j], gates[2 * h + j], gates[3 * h + j]);
            let tc = cache.tc[t * h + j];
            let dh = dh_out[t * h + j] + dh_next[j];
            let d_o = dh * tc;
            let dc = dh * o * (1.0 - tc * tc) + dc_next[j];
            let c_prev = prev.map_or(0.0, |tp| cache.c[tp * h + j]);
            dz[j] = dc * gg * i * (1.0 - i);
            dz[h + j] = dc * c_prev * f * (1.0 - f);
            dz[2 * h + j] = dc * i * (1.0 - gg * gg);
            dz[3 * h + j] = d_o * o * (1.0 - o);
            dc_next[j] = dc * f;
        }
        add(&mut g.b, &dz);
        g.w_ih.outer_add(&dz, x.row(t));
        p.w_ih.matvec_t_add(&dz, dx.row_mut(t));
        dh_next.iter_mut().for_each(|v| *v = 0.0);
        if let Some(tp) = prev {
            g.w_hh.outer_add(&dz, &cache.h[tp * h..(tp + 1) * h]);
            p.w_hh.matvec_t_add(&dz, &mut dh_next);
        }
    }
}

/// Run a stacked BiLSTM over the first `len` rows of `x`. Returns the last
/// forward state concatenated with the last backward state of the top layer.
pub(crate) fn encode(layers: &[BiLayer], x: &Mat, len: usize) -> Result<(Vec<f64>, Vec<LayerCache>)> {
    if len == 0 {
        return Err(Error::Empty("zero-length input sequence"));
    }
    if len > x.rows {
        return Err(Error::Shape(format!("length {len} exceeds {} rows", x.rows)));
    }
    let mut input = Mat { rows: len, cols: x.cols, data: x.data[..len * x.cols].to_vec() };
    let mut caches = Vec::with_capacity(layers.len());
    for layer in layers {
        if input.cols != layer.fwd.w_ih.cols {
            return Err(Error::Shape(format!("encoder input width {} != {}", input.cols, layer.fwd.w_ih.cols)));
        }
        let h = layer.fwd.hidden();
        let fwd = dir_forward(&layer.fwd, &input, len, false);
        let bwd = dir_forward(&layer.bwd, &input, len, true);
        let mut output = Mat::zeros(len, 2 * h);
        for t in 0..len {
            let row = output.row_mut(t);
            row[..h].copy_from_slice(&fwd.h[t * h..(t + 1) * h]);
            row[h..].copy_from_slice(&bwd.h[t * h..(t + 1) * h]);
        }
        let next = output.clone();
        caches.push(LayerCache { input, fwd, bwd, output });
        input = next;
    }
    let top = &caches.last().expect("at least one layer").output;
    let h = top.cols / 2;
    let mut v = Vec::with_capacity(2 * h);
    v.extend_from_slice(&top.row(len - 1)[..h]);
    v.extend_from_slice(&top.row(0)[h..]);
    Ok((v, caches))
}

/// Backpropagate a gradient on the final representation through the
/// encoder; returns the gradient on the encoder's input rows.
fn encode_backward(layers: &[BiLayer], caches: &[LayerCache], dv: &[f64], grads: &mut [BiLayer]) -> Mat {
    let top = &caches.last().expect("at least one layer").output;
    let len = top.rows;
    let h = top.cols / 2;
    let mut d_out = Mat::zeros(len, 2 * h);
    d_out.row_mut(len - 1)[..h].copy_from_slice(&dv[..h]);
    d_out.row_mut(0)[h..].copy_from_slice(&dv[h..]);
    for (l, (layer, cache)) in layers.iter().zip(caches).enumerate().rev() {
        let mut dh_f = vec![0.0; len * h];
        let mut dh_b = vec![0.0; len * h];
        for t in 0..len {
            let r = d_out.row(t);
            dh_f[t * h..(t + 1) * h].copy_from_slice(&r[..h]);
            dh_b[t * h..(t + 1) * h].copy_from_slice(&r[h..]);
        }
        let mut dx = Mat::zeros(len, cache.input.cols);
        dir_backward(&layer.fwd, &cache.input, &cache.fwd, &dh_f, false, &mut grads[l].fwd, &mut dx);
        dir_backward(&layer.bwd, &cache.input, &cache.bwd, &dh_b, true, &mut grads[l].bwd, &mut dx);
        d_out = dx;
    }
    d_out
}

pub(crate) fn combine(va: &[f64], vd: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(3 * va.len());
    out.extend(va.iter().zip(vd).map(|(a, d)| a * d));
    out.extend(va.iter().zip(vd).map(|(a, d)| a - d));
    out.extend(va.iter().zip(vd).map(|(a, d)| a + d));
    out
}

fn affine_sigmoid(w: &Mat, b: &[f64], x: &[f64]) -> Vec<f64> {
    let mut z = b.to_vec();
    w.matvec_add(x, &mut z);
    z.iter().map(|&v| sigmoid(v)).collect()
}

pub(crate) fn forward(model: &Model, input: &EncodedInput) -> Result<Forward> {
    let p = &model.params;
    let (dt, dp, dl) = model.dep_stream(input);
    let amr_len = input.amr_len;
    let amr_x = embed(model, &input.amr_tokens, &input.amr_pointers, Some(&input.amr_senses), amr_len)?;
    let dep_x = embed(model, dt, dp, None, dl)?;
    let (va, amr_layers) = encode(&p.amr_enc, &amr_x, amr_len)?;
    let (vd, dep_layers) = encode(&p.dep_enc, &dep_x, dl)?;
    let comb = combine(&va, &vd);
    let mut out = [0.0; SCORE_DIM];
    let sub = match &p.sub_head {
        Some(sh) => {
            let sub = affine_sigmoid(&sh.w, &sh.b, &comb);
            let mut u = comb.clone();
            u.extend_from_slice(&sub);
            let main = affine_sigmoid(&p.main_head.w, &p.main_head.b, &u);
            out[..MAIN_DIM].copy_from_slice(&main);
            out[MAIN_DIM..].copy_from_slice(&sub);
            Some(sub)
        }
        None => {
            out.copy_from_slice(&affine_sigmoid(&p.main_head.w, &p.main_head.b, &comb));
            None
        }
    };
    let ids = |t: &[u32], ptr: &[u32], s: Option<&[u32]>, n: usize| StreamIds {
        tokens: t[..n].to_vec(),
        pointers: ptr[..n].to_vec(),
        senses: s.map(|s| s[..n].to_vec()),
    };
    Ok(Forward {
        amr_ids: ids(&input.amr_tokens, &input.amr_pointers, Some(&input.amr_senses), amr_len),
        dep_ids: ids(dt, dp, None, dl),
        amr_layers,
        dep_layers,
        va,
        vd,
        comb,
        sub,
        out,
    })
}

/// Accumulate into `g` the gradient of a loss whose derivative with
/// respect to the 36 outputs is `d_out`.
pub(crate) fn backward(model: &Model, fw: &Forward, d_out: &[f64; SCORE_DIM], g: &mut Grads) {
    let p = &model.params;
    let c = fw.comb.len();
    let mut d_comb = vec![0.0; c];
    match (&p.sub_head, &fw.sub, &mut g.sub_head) {
        (Some(sh), Some(sub), Some(gsh)) => {
            let dz_m: Vec<f64> = (0..MAIN_DIM).map(|j| d_out[j] * fw.out[j] * (1.0 - fw.out[j])).collect();
            let mut u = fw.comb.clone();
            u.extend_from_slice(sub);
            g.main_head.w.outer_add(&dz_m, &u);
            add(&mut g.main_head.b, &dz_m);
            let mut du = vec![0.0; u.len()];
            p.main_head.w.matvec_t_add(&dz_m, &mut du);
            add(&mut d_comb, &du[..c]);
            let dz_s: Vec<f64> = sub
                .iter()
                .enumerate()
                .map(|(j, &s)| (d_out[MAIN_DIM + j] + du[c + j]) * s * (1.0 - s))
                .collect();
            gsh.w.outer_add(&dz_s, &fw.comb);
            add(&mut gsh.b, &dz_s);
            sh.w.matvec_t_add(&dz_s, &mut d_comb);
        }
        _ => {
            let dz: Vec<f64> = (0..SCORE_DIM).map(|j| d_out[j] * fw.out[j] * (1.0 - fw.out[j])).collect();
            g.main_head.w.outer_add(&dz, &fw.comb);
            add(&mut g.main_head.b, &dz);
            p.main_head.w.matvec_t_add(&dz, &mut d_comb);
        }
    }
    let n = fw.va.len();
    let mut dva = vec![0.0; n];
    let mut dvd = vec![0.0; n];
    for j in 0..n {
        let (g1, g2, g3) = (d_comb[j], d_comb[n + j], d_comb[2 * n + j]);
        dva[j] = g1 * fw.vd[j] + g2 + g3;
        dvd[j] = g1 * fw.va[j] - g2 + g3;
    }
    let dx_amr = encode_backward(&p.amr_enc, &fw.amr_layers, &dva, &mut g.amr_enc);
    let dx_dep = encode_backward(&p.dep_enc, &fw.dep_layers, &dvd, &mut g.dep_enc);
    for (ids, dx) in [(&fw.amr_ids, &dx_amr), (&fw.dep_ids, &dx_dep)] {
        for t in 0..dx.rows {
            let r = dx.row(t);
            add(g.token_emb.row_mut(ids.tokens[t] as usize), r);
            if model.config.use_pointers {
                add(g.pointer_emb.row_mut(ids.pointers[t] as usize), r);
            }
            if let Some(s) = &ids.senses {
                add(g.sense_emb.row_mut(s[t] as usize), r);
            }
        }
    }
    // PAD rows are frozen at zero
    g.zero_pad_rows();
}
