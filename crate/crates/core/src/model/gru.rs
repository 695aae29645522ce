//! Single-layer gated recurrent unit (gate order: reset, update, candidate).
//!
//! ```text
//! r  = σ(W_ir x + b_ir + W_hr h + b_hr)
//! z  = σ(W_iz x + b_iz + W_hz h + b_hz)
//! n  = tanh(W_in x + b_in + r ⊙ (W_hn h + b_hn))
//! h' = (1 - z) ⊙ n + z ⊙ h
//! ```

use super::layers::sigmoid;

#[derive(Debug, Clone, Copy)]
pub(crate) struct Gru {
    pub w_ih: usize,
    pub w_hh: usize,
    pub b_ih: usize,
    pub b_hh: usize,
    pub inp: usize,
    pub hidden: usize,
}

#[derive(Debug, Clone)]
pub(crate) struct GruStep {
    pub x: Vec<f64>,
    pub h_prev: Vec<f64>,
    pub r: Vec<f64>,
    pub z: Vec<f64>,
    pub n: Vec<f64>,
    /// `W_hn h + b_hn`, needed for the reset-gate gradient.
    pub hn: Vec<f64>,
    pub h: Vec<f64>,
}

fn matvec(p: &[f64], offset: usize, rows: usize, cols: usize, x: &[f64], out: &mut [f64]) {
    for (r, o) in out.iter_mut().enumerate().take(rows) {
        let row = &p[offset + r * cols..offset + (r + 1) * cols];
        *o += row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
    }
}

impl Gru {
    pub fn n_params(inp: usize, hidden: usize) -> usize {
        3 * hidden * inp + 3 * hidden * hidden + 6 * hidden
    }

    pub fn step(&self, p: &[f64], x: &[f64], h_prev: &[f64]) -> GruStep {
        let hd = self.hidden;
        let mut gi = p[self.b_ih..self.b_ih + 3 * hd].to_vec();
        matvec(p, self.w_ih, 3 * hd, self.inp, x, &mut gi);
        let mut gh = p[self.b_hh..self.b_hh + 3 * hd].to_vec();
        matvec(p, self.w_hh, 3 * hd, hd, h_prev, &mut gh);
        let r: Vec<f64> = (0..hd).map(|k| sigmoid(gi[k] + gh[k])).collect();
        let z: Vec<f64> = (0..hd).map(|k| sigmoid(gi[hd + k] + gh[hd + k])).collect();
        let hn = gh[2 * hd..].to_vec();
        let n: Vec<f64> = (0..hd).map(|k| (gi[2 * hd + k] + r[k] * hn[k]).tanh()).collect();
        let h = (0..hd).map(|k| (1.0 - z[k]) * n[k] + z[k] * h_prev[k]).collect();
        GruStep {
            x: x.to_vec(),
            h_prev: h_prev.to_vec(),
            r,
            z,
            n,
            hn,
            h,
        }
    }

    /// Backpropagates `d_h` (gradient w.r.t. this step's output) and returns
    /// the gradients w.r.t. the step input and the previous hidden state.
    pub fn step_backward(&self, p: &[f64], s: &GruStep, d_h: &[f64], grad: &mut [f64]) -> (Vec<f64>, Vec<f64>) {
        let hd = self.hidden;
        let mut dgi = vec![0.0; 3 * hd];
        let mut dgh = vec![0.0; 3 * hd];
        let mut dh_prev = vec![0.0; hd];
        for k in 0..hd {
            let dn = d_h[k] * (1.0 - s.z[k]);
            let dz = d_h[k] * (s.h_prev[k] - s.n[k]);
            dh_prev[k] = d_h[k] * s.z[k];
            let da_n = dn * (1.0 - s.n[k] * s.n[k]);
            let dr = da_n * s.hn[k];
            let da_r = dr * s.r[k] * (1.0 - s.r[k]);
            let da_z = dz * s.z[k] * (1.0 - s.z[k]);
            dgi[k] = da_r;
            dgi[hd + k] = da_z;
            dgi[2 * hd + k] = da_n;
            dgh[k] = da_r;
            dgh[hd + k] = da_z;
            dgh[2 * hd + k] = da_n * s.r[k];
        }
        let mut dx = vec![0.0; self.inp];
        for (row, &g) in dgi.iter().enumerate() {
            grad[self.b_ih + row] += g;
            let w0 = self.w_ih + row * self.inp;
            for i in 0..self.inp {
                grad[w0 + i] += g * s.x[i];
                dx[i] += g * p[w0 + i];
            }
        }
        for (row, &g) in dgh.iter().enumerate() {
            grad[self.b_hh + row] += g;
            let w0 = self.w_hh + row * hd;
            for i in 0..hd {
                grad[w0 + i] += g * s.h_prev[i];
                dh_prev[i] += g * p[w0 + i];
            }
        }
        (dx, dh_prev)
    }
}
