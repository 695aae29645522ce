//! Forward and backward kernels over flat `[channel][y][x]` buffers.
//!
//! Backward functions accumulate into the gradient buffers they are given.

/// Offsets of a 3x3 same-padded convolution inside the parameter vector.
/// Weights are laid out `[cout][cin][3][3]`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Conv {
    pub w: usize,
    pub b: usize,
    pub cin: usize,
    pub cout: usize,
}

/// Offsets of a dense layer; weights are `[out][in]`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Dense {
    pub w: usize,
    pub b: usize,
    pub inp: usize,
    pub out: usize,
}

fn shifted_range(len: usize, d: isize) -> (usize, usize) {
    let lo = (-d).max(0) as usize;
    let hi = (len as isize - d).min(len as isize) as usize;
    (lo, hi)
}

impl Conv {
    pub fn n_params(cin: usize, cout: usize) -> usize {
        cout * cin * 9 + cout
    }

    pub fn forward(&self, p: &[f64], input: &[f64], h: usize, w: usize) -> Vec<f64> {
        let hw = h * w;
        debug_assert_eq!(input.len(), self.cin * hw);
        let weight = &p[self.w..self.w + self.cout * self.cin * 9];
        let bias = &p[self.b..self.b + self.cout];
        let mut out = vec![0.0; self.cout * hw];
        for co in 0..self.cout {
            let oc = &mut out[co * hw..(co + 1) * hw];
            oc.fill(bias[co]);
            for ci in 0..self.cin {
                let ic = &input[ci * hw..(ci + 1) * hw];
                for ky in 0..3 {
                    let dy = ky as isize - 1;
                    let (y0, y1) = shifted_range(h, dy);
                    for kx in 0..3 {
                        let dx = kx as isize - 1;
                        let (x0, x1) = shifted_range(w, dx);
                        let wv = weight[((co * self.cin + ci) * 3 + ky) * 3 + kx];
                        for y in y0..y1 {
                            let sy = (y as isize + dy) as usize;
                            let orow = &mut oc[y * w + x0..y * w + x1];
                            let sx0 = (x0 as isize + dx) as usize;
                            let irow = &ic[sy * w + sx0..sy * w + sx0 + (x1 - x0)];
                            for (o, i) in orow.iter_mut().zip(irow) {
                                *o += wv * i;
                            }
                        }
                    }
                }
            }
        }
        out
    }

    pub fn backward(
        &self,
        p: &[f64],
        input: &[f64],
        h: usize,
        w: usize,
        grad_out: &[f64],
        grad: &mut [f64],
        mut grad_in: Option<&mut [f64]>,
    ) {
        let hw = h * w;
        for co in 0..self.cout {
            let go = &grad_out[co * hw..(co + 1) * hw];
            grad[self.b + co] += go.iter().sum::<f64>();
            for ci in 0..self.cin {
                let ic = &input[ci * hw..(ci + 1) * hw];
                for ky in 0..3 {
                    let dy = ky as isize - 1;
                    let (y0, y1) = shifted_range(h, dy);
                    for kx in 0..3 {
                        let dx = kx as isize - 1;
                        let (x0, x1) = shifted_range(w, dx);
                        let widx = ((co * self.cin + ci) * 3 + ky) * 3 + kx;
                        let wv = p[self.w + widx];
                        let mut acc = 0.0;
                        for y in y0..y1 {
                            let sy = (y as isize + dy) as usize;
                            let sx0 = (x0 as isize + dx) as usize;
                            let grow = &go[y * w + x0..y * w + x1];
                            let irow = &ic[sy * w + sx0..sy * w + sx0 + (x1 - x0)];
                            for (g, i) in grow.iter().zip(irow) {
                                acc += g * i;
                            }
                            if let Some(gi) = grad_in.as_deref_mut() {
                                let girow = &mut gi[ci * hw + sy * w + sx0..ci * hw + sy * w + sx0 + (x1 - x0)];
                                for (d, g) in girow.iter_mut().zip(grow) {
                                    *d += wv * g;
                                }
                            }
                        }
                        grad[self.w + widx] += acc;
                    }
                }
            }
        }
    }
}

impl Dense {
    pub fn n_params(inp: usize, out: usize) -> usize {
        inp * out + out
    }

    pub fn forward(&self, p: &[f64], x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.inp);
        (0..self.out)
            .map(|o| {
                let row = &p[self.w + o * self.inp..self.w + (o + 1) * self.inp];
                p[self.b + o] + row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()
            })
            .collect()
    }

    pub fn backward(&self, p: &[f64], x: &[f64], grad_out: &[f64], grad: &mut [f64], grad_in: Option<&mut [f64]>) {
        for (o, &g) in grad_out.iter().enumerate() {
            grad[self.b + o] += g;
            let row = &mut grad[self.w + o * self.inp..self.w + (o + 1) * self.inp];
            for (r, xi) in row.iter_mut().zip(x) {
                *r += g * xi;
            }
        }
        if let Some(gi) = grad_in {
            for (o, &g) in grad_out.iter().enumerate() {
                let row = &p[self.w + o * self.inp..self.w + (o + 1) * self.inp];
                for (d, wv) in gi.iter_mut().zip(row) {
                    *d += g * wv;
                }
            }
        }
    }
}

pub(crate) fn relu_inplace(x: &mut [f64]) {
    for v in x {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
}

/// Zeroes gradient entries where the ReLU output was not positive.
pub(crate) fn relu_backward(output: &[f64], grad: &mut [f64]) {
    for (g, &o) in grad.iter_mut().zip(output) {
        if o <= 0.0 {
            *g = 0.0;
        }
    }
}

pub(crate) fn tanh_inplace(x: &mut [f64]) {
    for v in x {
        *v = v.tanh();
    }
}

pub(crate) fn tanh_backward(output: &[f64], grad: &mut [f64]) {
    for (g, &o) in grad.iter_mut().zip(output) {
        *g *= 1.0 - o * o;
    }
}

/// 2x2 average pooling with stride 2; `h` and `w` must be even.
pub(crate) fn avg_pool2(input: &[f64], c: usize, h: usize, w: usize) -> Vec<f64> {
    let (oh, ow) = (h / 2, w / 2);
    let mut out = vec![0.0; c * oh * ow];
    for ch in 0..c {
        let ic = &input[ch * h * w..(ch + 1) * h * w];
        for y in 0..oh {
            for x in 0..ow {
                let i = 2 * y * w + 2 * x;
                out[ch * oh * ow + y * ow + x] = 0.25 * (ic[i] + ic[i + 1] + ic[i + w] + ic[i + w + 1]);
            }
        }
    }
    out
}

pub(crate) fn avg_pool2_backward(grad_out: &[f64], c: usize, h: usize, w: usize) -> Vec<f64> {
    let (oh, ow) = (h / 2, w / 2);
    let mut gi = vec![0.0; c * h * w];
    for ch in 0..c {
        for y in 0..oh {
            for x in 0..ow {
                let g = 0.25 * grad_out[ch * oh * ow + y * ow + x];
                let i = ch * h * w + 2 * y * w + 2 * x;
                gi[i] = g;
                gi[i + 1] = g;
                gi[i + w] = g;
                gi[i + w + 1] = g;
            }
        }
    }
    gi
}

pub(crate) fn global_avg_pool(input: &[f64], c: usize, hw: usize) -> Vec<f64> {
    input.chunks_exact(hw).take(c).map(|ch| ch.iter().sum::<f64>() / hw as f64).collect()
}

pub(crate) fn global_avg_pool_backward(grad_out: &[f64], hw: usize) -> Vec<f64> {
    grad_out
        .iter()
        .flat_map(|&g| std::iter::repeat_n(g / hw as f64, hw))
        .collect()
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}
