//! Minimal dense and LSTM layers over a flat parameter vector, with
//! hand-written backward passes.

/// Hands out consecutive ranges of a flat parameter vector.
#[derive(Debug, Default)]
pub(crate) struct Layout {
    len: usize,
}

impl Layout {
    fn take(&mut self, n: usize) -> usize {
        let at = self.len;
        self.len += n;
        at
    }

    pub(crate) fn len(&self) -> usize {
        self.len
    }

    pub(crate) fn dense(&mut self, out: usize, inp: usize) -> Dense {
        let w = self.take(out * inp);
        let b = self.take(out);
        Dense { w, b, out, inp }
    }

    pub(crate) fn lstm(&mut self, input: usize, hidden: usize) -> Lstm {
        Lstm {
            gates: self.dense(4 * hidden, input + hidden),
            input,
            hidden,
        }
    }
}

/// y = W x + b, W stored row-major (out × inp).
#[derive(Debug, Clone, Copy)]
pub(crate) struct Dense {
    w: usize,
    b: usize,
    pub(crate) out: usize,
    pub(crate) inp: usize,
}

impl Dense {
    pub(crate) fn forward(&self, p: &[f64], x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.inp);
        let w = &p[self.w..self.w + self.out * self.inp];
        let b = &p[self.b..self.b + self.out];
        w.chunks_exact(self.inp)
            .zip(b)
            .map(|(row, bias)| bias + row.iter().zip(x).map(|(a, v)| a * v).sum::<f64>())
            .collect()
    }

    /// Accumulates dW, db into `g` and returns dx.
    pub(crate) fn backward(&self, p: &[f64], g: &mut [f64], x: &[f64], dy: &[f64]) -> Vec<f64> {
        let mut dx = vec![0.0; self.inp];
        let w = &p[self.w..self.w + self.out * self.inp];
        {
            let gw = &mut g[self.w..self.w + self.out * self.inp];
            for ((row, grow), &d) in w
                .chunks_exact(self.inp)
                .zip(gw.chunks_exact_mut(self.inp))
                .zip(dy)
            {
                if d == 0.0 {
                    continue;
                }
                for ((gw_k, x_k), (w_k, dx_k)) in
                    grow.iter_mut().zip(x).zip(row.iter().zip(dx.iter_mut()))
                {
                    *gw_k += d * x_k;
                    *dx_k += d * w_k;
                }
            }
        }
        for (gb, d) in g[self.b..self.b + self.out].iter_mut().zip(dy) {
            *gb += d;
        }
        dx
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Lstm {
    gates: Dense,
    pub(crate) input: usize,
    pub(crate) hidden: usize,
}

/// Values kept from one forward step for the backward pass.
#[derive(Debug, Clone)]
pub(crate) struct LstmCache {
    xh: Vec<f64>,
    i: Vec<f64>,
    f: Vec<f64>,
    g: Vec<f64>,
    o: Vec<f64>,
    c_prev: Vec<f64>,
    tanh_c: Vec<f64>,
}

#[derive(Debug, Clone)]
pub(crate) struct LstmState {
    pub(crate) h: Vec<f64>,
    pub(crate) c: Vec<f64>,
}

impl LstmState {
    pub(crate) fn zeros(hidden: usize) -> Self {
        Self {
            h: vec![0.0; hidden],
            c: vec![0.0; hidden],
        }
    }
}

impl Lstm {
    pub(crate) fn step(&self, p: &[f64], x: &[f64], state: &LstmState) -> (LstmState, LstmCache) {
        let hd = self.hidden;
        let mut xh = Vec::with_capacity(self.input + hd);
        xh.extend_from_slice(x);
        xh.extend_from_slice(&state.h);
        let a = self.gates.forward(p, &xh);
        let i: Vec<f64> = a[..hd].iter().map(|&v| sigmoid(v)).collect();
        let f: Vec<f64> = a[hd..2 * hd].iter().map(|&v| sigmoid(v)).collect();
        let g: Vec<f64> = a[2 * hd..3 * hd].iter().map(|&v| v.tanh()).collect();
        let o: Vec<f64> = a[3 * hd..].iter().map(|&v| sigmoid(v)).collect();
        let c: Vec<f64> = (0..hd).map(|k| f[k] * state.c[k] + i[k] * g[k]).collect();
        let tanh_c: Vec<f64> = c.iter().map(|v| v.tanh()).collect();
        let h: Vec<f64> = (0..hd).map(|k| o[k] * tanh_c[k]).collect();
        let cache = LstmCache {
            xh,
            i,
            f,
            g,
            o,
            c_prev: state.c.clone(),
            tanh_c,
        };
        (LstmState { h, c }, cache)
    }

    /// Given dL/dh and dL/dc at this step's output, accumulates parameter
    /// gradients and returns (dx, dh_prev, dc_prev).
    pub(crate) fn backward(
        &self,
        p: &[f64],
        grad: &mut [f64],
        cache: &LstmCache,
        dh: &[f64],
        dc: &[f64],
    ) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let hd = self.hidden;
        let mut da = vec![0.0; 4 * hd];
        let mut dc_prev = vec![0.0; hd];
        for k in 0..hd {
            let (i, f, g, o, tc) = (
                cache.i[k],
                cache.f[k],
                cache.g[k],
                cache.o[k],
                cache.tanh_c[k],
            );
            let d_o = dh[k] * tc;
            let dct = dc[k] + dh[k] * o * (1.0 - tc * tc);
            let d_i = dct * g;
            let d_g = dct * i;
            let d_f = dct * cache.c_prev[k];
            dc_prev[k] = dct * f;
            da[k] = d_i * i * (1.0 - i);
            da[hd + k] = d_f * f * (1.0 - f);
            da[2 * hd + k] = d_g * (1.0 - g * g);
            da[3 * hd + k] = d_o * o * (1.0 - o);
        }
        let dxh = self.gates.backward(p, grad, &cache.xh, &da);
        let (dx, dh_prev) = dxh.split_at(self.input);
        (dx.to_vec(), dh_prev.to_vec(), dc_prev)
    }
}
