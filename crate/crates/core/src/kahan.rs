//! Compensated (Neumaier) accumulation for complex partial sums, plus a
//! fixed-order pairwise reduction so parallel runs are bit-stable across
//! thread counts.

use num_complex::Complex64;

#[derive(Debug, Clone, Copy, Default)]
pub struct KahanComplex {
    sum_re: f64,
    sum_im: f64,
    c_re: f64,
    c_im: f64,
}

fn neumaier(sum: &mut f64, comp: &mut f64, v: f64) {
    let t = *sum + v;
    if sum.abs() >= v.abs() {
        *comp += (*sum - t) + v;
    } else {
        *comp += (v - t) + *sum;
    }
    *sum = t;
}

impl KahanComplex {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, v: Complex64) {
        neumaier(&mut self.sum_re, &mut self.c_re, v.re);
        neumaier(&mut self.sum_im, &mut self.c_im, v.im);
    }

    #[inline]
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.sum_re + self.c_re, self.sum_im + self.c_im)
    }
}

/// Reduce chunk results in a fixed pairwise order (independent of how the
/// chunks were produced), so the result does not depend on the thread count.
pub fn pairwise_reduce(mut vals: Vec<Complex64>) -> Complex64 {
    if vals.is_empty() {
        return Complex64::new(0.0, 0.0);
    }
    while vals.len() > 1 {
        let mut next = Vec::with_capacity(vals.len() / 2 + 1);
        for pair in vals.chunks(2) {
            next.push(if pair.len() == 2 { pair[0] + pair[1] } else { pair[0] });
        }
        vals = next;
    }
    vals[0]
}
