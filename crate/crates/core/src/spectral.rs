//! Complex DFT for arbitrary lengths.
//!
//! [`FftPlan`] factors the length into primes and runs a recursive
//! decimation-in-time Cooley-Tukey transform. Each radix-`p` butterfly is
//! evaluated directly when `p` is small and through Bluestein's chirp-z
//! convolution (backed by a power-of-two plan) when `p` is a larger prime,
//! so every length runs in `O(N log N)`.
//!
//! The forward transform is unnormalized:
//! `X_k = sum_n x_n * exp(-2 pi i k n / N)`. No padding is ever applied, the
//! output always has the input's length.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use thiserror::Error;

/// One complex coefficient.
pub type ComplexValue = Complex64;

/// Largest prime radix evaluated with a direct butterfly. Larger prime
/// factors go through Bluestein.
pub const DIRECT_RADIX_LIMIT: usize = 13;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("transform input is empty")]
    EmptyInput,
    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },
    #[error("plan length {expected} does not match input length {actual}")]
    LengthMismatch { expected: usize, actual: usize },
}

/// A reusable forward-transform plan for one length.
#[derive(Debug, Clone)]
pub struct FftPlan {
    len: usize,
    node: Arc<Node>,
}

#[derive(Debug)]
enum Node {
    Identity,
    /// Literal DFT of a small prime length. `roots[j] = w^j`, `w = exp(-2 pi i / p)`.
    Direct { roots: Vec<Complex64> },
    /// Chirp-z evaluation of a prime length through a power-of-two convolution.
    Bluestein(Bluestein),
    /// `len = radix * sub_len`.
    CooleyTukey(CooleyTukey),
}

#[derive(Debug)]
struct CooleyTukey {
    len: usize,
    radix: usize,
    sub: Arc<Node>,
    sub_len: usize,
    butterfly: Arc<Node>,
    /// `exp(-2 pi i j / len)` for `j` in `0..len`.
    twiddles: Vec<Complex64>,
}

#[derive(Debug)]
struct Bluestein {
    len: usize,
    conv_len: usize,
    inner: Arc<Node>,
    /// `exp(-i pi j^2 / len)` for `j` in `0..len`.
    chirp: Vec<Complex64>,
    /// Forward transform of the conjugate chirp laid out for circular convolution.
    kernel_spectrum: Vec<Complex64>,
}

impl FftPlan {
    pub fn new(len: usize) -> Result<Self, SpectralError> {
        if len == 0 {
            return Err(SpectralError::EmptyInput);
        }
        Ok(Self {
            len,
            node: Arc::new(Node::build(len)),
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Forward transform into a fresh vector.
    pub fn forward(&self, input: &[Complex64]) -> Result<Vec<Complex64>, SpectralError> {
        if input.len() != self.len {
            return Err(SpectralError::LengthMismatch {
                expected: self.len,
                actual: input.len(),
            });
        }
        check_finite(input)?;
        let mut out = vec![Complex64::new(0.0, 0.0); self.len];
        self.node.transform(input, 1, &mut out);
        Ok(out)
    }

    /// Forward transform of a real signal.
    pub fn forward_real(&self, input: &[f64]) -> Result<Vec<Complex64>, SpectralError> {
        let complex: Vec<Complex64> = input.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.forward(&complex)
    }
}

impl Node {
    fn build(len: usize) -> Node {
        if len == 1 {
            return Node::Identity;
        }
        let radix = smallest_prime_factor(len);
        if radix == len {
            if len <= DIRECT_RADIX_LIMIT {
                Node::Direct {
                    roots: (0..len).map(|j| unit_root(j, len)).collect(),
                }
            } else {
                Node::Bluestein(Bluestein::new(len))
            }
        } else {
            let sub_len = len / radix;
            Node::CooleyTukey(CooleyTukey {
                len,
                radix,
                sub: Arc::new(Node::build(sub_len)),
                sub_len,
                butterfly: Arc::new(Node::build(radix)),
                twiddles: (0..len).map(|j| unit_root(j, len)).collect(),
            })
        }
    }

    /// Transforms `input[0], input[stride], ...` into `out`.
    fn transform(&self, input: &[Complex64], stride: usize, out: &mut [Complex64]) {
        match self {
            Node::Identity => out[0] = input[0],
            Node::Direct { roots } => {
                let p = roots.len();
                for (k, slot) in out.iter_mut().enumerate() {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for j in 0..p {
                        acc += input[j * stride] * roots[(j * k) % p];
                    }
                    *slot = acc;
                }
            }
            Node::Bluestein(b) => b.transform(input, stride, out),
            Node::CooleyTukey(ct) => ct.transform(input, stride, out),
        }
    }
}

impl CooleyTukey {
    fn transform(&self, input: &[Complex64], stride: usize, out: &mut [Complex64]) {
        let (p, m) = (self.radix, self.sub_len);
        for r in 0..p {
            self.sub
                .transform(&input[r * stride..], stride * p, &mut out[r * m..(r + 1) * m]);
        }
        if p == 2 {
            for k in 0..m {
                let a = out[k];
                let b = out[m + k] * self.twiddles[k];
                out[k] = a + b;
                out[m + k] = a - b;
            }
            return;
        }
        let mut gathered = vec![Complex64::new(0.0, 0.0); p];
        let mut mixed = vec![Complex64::new(0.0, 0.0); p];
        for k in 0..m {
            for (r, g) in gathered.iter_mut().enumerate() {
                *g = out[r * m + k] * self.twiddles[(r * k) % self.len];
            }
            self.butterfly.transform(&gathered, 1, &mut mixed);
            for (q, v) in mixed.iter().enumerate() {
                out[q * m + k] = *v;
            }
        }
    }
}

impl Bluestein {
    fn new(len: usize) -> Self {
        let conv_len = (2 * len - 1).next_power_of_two();
        let inner = Arc::new(Node::build(conv_len));
        let two_len = 2 * len as u128;
        let chirp: Vec<Complex64> = (0..len)
            .map(|j| {
                // j^2 mod 2N keeps the phase argument small for long lengths.
                let e = ((j as u128 * j as u128) % two_len) as f64;
                Complex64::from_polar(1.0, -PI * e / len as f64)
            })
            .collect();
        let mut kernel = vec![Complex64::new(0.0, 0.0); conv_len];
        kernel[0] = chirp[0].conj();
        for j in 1..len {
            kernel[j] = chirp[j].conj();
            kernel[conv_len - j] = chirp[j].conj();
        }
        let mut kernel_spectrum = vec![Complex64::new(0.0, 0.0); conv_len];
        inner.transform(&kernel, 1, &mut kernel_spectrum);
        Self {
            len,
            conv_len,
            inner,
            chirp,
            kernel_spectrum,
        }
    }

    fn transform(&self, input: &[Complex64], stride: usize, out: &mut [Complex64]) {
        let mut buf = vec![Complex64::new(0.0, 0.0); self.conv_len];
        for j in 0..self.len {
            buf[j] = input[j * stride] * self.chirp[j];
        }
        let mut spec = vec![Complex64::new(0.0, 0.0); self.conv_len];
        self.inner.transform(&buf, 1, &mut spec);
        // inverse via conj(F(conj(.))) / L
        for (s, k) in spec.iter_mut().zip(&self.kernel_spectrum) {
            *s = (*s * k).conj();
        }
        self.inner.transform(&spec, 1, &mut buf);
        let scale = 1.0 / self.conv_len as f64;
        for (k, slot) in out.iter_mut().enumerate() {
            *slot = buf[k].conj() * scale * self.chirp[k];
        }
    }
}

/// `exp(-2 pi i j / n)`, computed from the reduced fraction for accuracy.
fn unit_root(j: usize, n: usize) -> Complex64 {
    let j = j % n;
    let angle = -2.0 * PI * j as f64 / n as f64;
    Complex64::new(angle.cos(), angle.sin())
}

fn smallest_prime_factor(n: usize) -> usize {
    if n.is_multiple_of(2) {
        return 2;
    }
    let mut f = 3;
    while f * f <= n {
        if n.is_multiple_of(f) {
            return f;
        }
        f += 2;
    }
    n
}

fn check_finite(input: &[Complex64]) -> Result<(), SpectralError> {
    match input.iter().position(|c| !c.re.is_finite() || !c.im.is_finite()) {
        Some(index) => Err(SpectralError::NonFinite { index }),
        None => Ok(()),
    }
}

/// Forward FFT of `input`, any length `>= 1`.
pub fn fft_forward(input: &[Complex64]) -> Result<Vec<Complex64>, SpectralError> {
    FftPlan::new(input.len())?.forward(input)
}

/// Literal `O(N^2)` evaluation of the DFT sum. Reference semantics for
/// [`fft_forward`]; not meant for production paths.
pub fn dft_direct(input: &[Complex64]) -> Result<Vec<Complex64>, SpectralError> {
    let n = input.len();
    if n == 0 {
        return Err(SpectralError::EmptyInput);
    }
    check_finite(input)?;
    let roots: Vec<Complex64> = (0..n).map(|j| unit_root(j, n)).collect();
    Ok((0..n)
        .map(|k| {
            input
                .iter()
                .enumerate()
                .map(|(j, x)| x * roots[(j * k) % n])
                .sum()
        })
        .collect())
}

/// Per-coefficient magnitudes `sqrt(re^2 + im^2)`.
pub fn amplitude_spectrum(spectrum: &[Complex64]) -> Result<Vec<f64>, SpectralError> {
    if spectrum.is_empty() {
        return Err(SpectralError::EmptyInput);
    }
    check_finite(spectrum)?;
    Ok(spectrum.iter().map(|c| c.re.hypot(c.im)).collect())
}
