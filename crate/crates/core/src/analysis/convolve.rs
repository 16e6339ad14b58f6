use std::collections::HashMap;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

/// How linear convolutions are evaluated. Both methods agree to ~1e-12 in
/// absolute terms on probability masses; the choice only affects speed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ConvolutionMethod {
    Direct,
    Spectral,
    #[default]
    Auto,
}

// Below this many multiply-adds direct summation wins.
const DIRECT_WORK_LIMIT: usize = 1 << 16;

/// Full linear convolution by direct summation, output length `a + b - 1`.
pub fn convolve_direct(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        for (o, &y) in out[i..].iter_mut().zip(b) {
            *o += x * y;
        }
    }
    out
}

/// Full linear convolution with the chosen method.
pub fn convolve(a: &[f64], b: &[f64], method: ConvolutionMethod) -> Vec<f64> {
    Convolver::new(b.to_vec(), method).apply(a)
}

struct Plan {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    kernel_spectrum: Vec<Complex<f64>>,
}

/// Repeated convolution against a fixed kernel. Kernel spectra are cached per
/// transform size, which is what makes the random-walk iterations cheap.
pub struct Convolver {
    kernel: Vec<f64>,
    method: ConvolutionMethod,
    planner: FftPlanner<f64>,
    plans: HashMap<usize, Plan>,
}

impl Convolver {
    pub fn new(kernel: Vec<f64>, method: ConvolutionMethod) -> Self {
        Convolver {
            kernel,
            method,
            planner: FftPlanner::new(),
            plans: HashMap::new(),
        }
    }

    pub fn kernel(&self) -> &[f64] {
        &self.kernel
    }

    pub fn apply(&mut self, signal: &[f64]) -> Vec<f64> {
        if signal.is_empty() || self.kernel.is_empty() {
            return Vec::new();
        }
        let direct = match self.method {
            ConvolutionMethod::Direct => true,
            ConvolutionMethod::Spectral => false,
            ConvolutionMethod::Auto => {
                signal.len().min(self.kernel.len()) < 32
                    || signal.len() * self.kernel.len() <= DIRECT_WORK_LIMIT
            }
        };
        if direct {
            convolve_direct(signal, &self.kernel)
        } else {
            self.spectral(signal)
        }
    }

    fn spectral(&mut self, signal: &[f64]) -> Vec<f64> {
        let out_len = signal.len() + self.kernel.len() - 1;
        let n = out_len.next_power_of_two();
        let plan = match self.plans.entry(n) {
            std::collections::hash_map::Entry::Occupied(e) => e.into_mut(),
            std::collections::hash_map::Entry::Vacant(e) => {
                let forward = self.planner.plan_fft_forward(n);
                let inverse = self.planner.plan_fft_inverse(n);
                let mut spec = to_complex(&self.kernel, n);
                forward.process(&mut spec);
                e.insert(Plan { forward, inverse, kernel_spectrum: spec })
            }
        };
        let mut buf = to_complex(signal, n);
        plan.forward.process(&mut buf);
        for (x, k) in buf.iter_mut().zip(&plan.kernel_spectrum) {
            *x *= k;
        }
        plan.inverse.process(&mut buf);
        let scale = 1.0 / n as f64;
        buf[..out_len].iter().map(|c| c.re * scale).collect()
    }
}

fn to_complex(v: &[f64], n: usize) -> Vec<Complex<f64>> {
    let mut out = vec![Complex::new(0.0, 0.0); n];
    for (o, &x) in out.iter_mut().zip(v) {
        o.re = x;
    }
    out
}
