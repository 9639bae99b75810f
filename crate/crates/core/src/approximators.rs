//! Parametric function families and their jets.
//!
//! Every family maps a scalar `x` to a scalar `y` and reports, at one point,
//! the value, the x-derivative and the gradients of both with respect to the
//! flat parameter vector. Parameter layouts:
//!
//! | family          | layout                                                        |
//! |-----------------|---------------------------------------------------------------|
//! | `Pade-[m/n]`    | `w_1..w_m, b_1, w'_1..w'_n, b_2`                               |
//! | `MLP-[[l,a],..]`| per layer: weights (row-major, `width x input`), shared bias;  |
//! |                 | then output weights `w'_1..w'_l`, output bias                  |
//! | `RBF-[l]`       | `w_1..w_l, c_1..c_l, rho_1..rho_l, b` with `sigma_j = exp(rho_j)` |
//! | `Leg-m`         | `w_1..w_m, b` (coefficients of `P_1..P_m`)                     |
//! | `Poly-m`        | `w_1..w_m, b` (coefficients of `x^1..x^m`)                     |

use std::fmt;
use std::ops::{Deref, DerefMut};
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Padé denominators smaller than this in magnitude are rejected.
pub const POLE_THRESHOLD: f64 = 1e-8;

const WEIGHT_STD: f64 = 0.1;
const PADE_DENOMINATOR_STD: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Activation {
    Sigmoid,
    Tanh,
}

impl Activation {
    pub fn name(self) -> &'static str {
        match self {
            Activation::Sigmoid => "sigmoid",
            Activation::Tanh => "tanh",
        }
    }

    /// Returns `(f(z), f'(z), f''(z))`.
    #[inline]
    fn eval<T: Scalar>(self, z: T) -> (T, T, T) {
        let one = T::one();
        let two = one + one;
        match self {
            Activation::Sigmoid => {
                let s = if z >= T::zero() {
                    one / (one + (-z).exp())
                } else {
                    let e = z.exp();
                    e / (one + e)
                };
                let d1 = s * (one - s);
                (s, d1, d1 * (one - two * s))
            }
            Activation::Tanh => {
                let t = z.tanh();
                let d1 = one - t * t;
                (t, d1, -two * t * d1)
            }
        }
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sigmoid" => Ok(Activation::Sigmoid),
            "tanh" => Ok(Activation::Tanh),
            other => Err(Error::InvalidStructure(format!(
                "unknown activation `{other}` (expected sigmoid or tanh)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Layer {
    pub width: usize,
    pub activation: Activation,
}

/// Structure descriptor of one approximator family.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum FamilySpec {
    Pade { m: usize, n: usize },
    Mlp { layers: Vec<Layer> },
    Rbf { centers: usize },
    Legendre { degree: usize },
    Poly { degree: usize },
}

impl FamilySpec {
    /// Number of trainable parameters.
    pub fn param_count(&self) -> usize {
        match self {
            FamilySpec::Pade { m, n } => m + n + 2,
            FamilySpec::Mlp { layers } => {
                let mut input = 1;
                let mut count = 0;
                for layer in layers {
                    count += layer.width * input + 1;
                    input = layer.width;
                }
                count + input + 1
            }
            FamilySpec::Rbf { centers } => 3 * centers + 1,
            FamilySpec::Legendre { degree } | FamilySpec::Poly { degree } => degree + 1,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            FamilySpec::Pade { .. } => "Pade",
            FamilySpec::Mlp { .. } => "MLP",
            FamilySpec::Rbf { .. } => "RBF",
            FamilySpec::Legendre { .. } => "Leg",
            FamilySpec::Poly { .. } => "Poly",
        }
    }

    fn validate(self) -> Result<Self> {
        match &self {
            FamilySpec::Mlp { layers } => {
                if layers.is_empty() {
                    return Err(Error::InvalidStructure("MLP needs at least one layer".into()));
                }
                if layers.iter().any(|l| l.width == 0) {
                    return Err(Error::InvalidStructure("MLP layer width must be positive".into()));
                }
            }
            FamilySpec::Rbf { centers: 0 } => {
                return Err(Error::InvalidStructure("RBF needs at least one center".into()))
            }
            FamilySpec::Legendre { degree: 0 } | FamilySpec::Poly { degree: 0 } => {
                return Err(Error::InvalidStructure("degree must be positive".into()))
            }
            _ => {}
        }
        Ok(self)
    }

    /// Deterministic initial parameters for the domain `[x_a, x_b]`.
    ///
    /// Weights are drawn from `N(0, 0.1)` and biases start at zero, except the
    /// Padé denominator: `b_2 = 1` with weights from `N(0, 0.01)`. RBF centers
    /// are evenly spaced cell midpoints and widths start at `(x_b - x_a) / l`.
    pub fn init_params<T: Scalar>(&self, seed: u64, x_a: T, x_b: T) -> ParamVector<T> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let weights = Normal::new(0.0, WEIGHT_STD).expect("valid std");
        let mut draw = |std: Normal<f64>| T::lit(std.sample(&mut rng));
        let mut p = Vec::with_capacity(self.param_count());
        match self {
            FamilySpec::Pade { m, n } => {
                let denominator = Normal::new(0.0, PADE_DENOMINATOR_STD).expect("valid std");
                p.extend((0..*m).map(|_| draw(weights)));
                p.push(T::zero());
                p.extend((0..*n).map(|_| draw(denominator)));
                p.push(T::one());
            }
            FamilySpec::Mlp { layers } => {
                let mut input = 1;
                for layer in layers {
                    p.extend((0..layer.width * input).map(|_| draw(weights)));
                    p.push(T::zero());
                    input = layer.width;
                }
                p.extend((0..input).map(|_| draw(weights)));
                p.push(T::zero());
            }
            FamilySpec::Rbf { centers } => {
                let l = *centers;
                let span = x_b - x_a;
                let cell = span / T::from_usize_lossy(l);
                p.extend((0..l).map(|_| draw(weights)));
                p.extend((0..l).map(|i| x_a + (T::from_usize_lossy(i) + T::lit(0.5)) * cell));
                p.extend((0..l).map(|_| cell.ln()));
                p.push(T::zero());
            }
            FamilySpec::Legendre { degree } | FamilySpec::Poly { degree } => {
                p.extend((0..*degree).map(|_| draw(weights)));
                p.push(T::zero());
            }
        }
        debug_assert_eq!(p.len(), self.param_count());
        ParamVector(p)
    }

    /// Evaluates the family at `x` on the reference interval `[-1, 1]`.
    pub fn eval_jet<T: Scalar>(&self, params: &[T], x: T) -> Result<Jet<T>> {
        self.eval_jet_in(params, x, Interval::reference())
    }

    /// Evaluates the family at `x` for a problem posed on `interval`.
    pub fn eval_jet_in<T: Scalar>(&self, params: &[T], x: T, interval: Interval<T>) -> Result<Jet<T>> {
        let mut jet = Jet::zeros(self.param_count());
        self.eval_jet_into(params, x, interval, &mut jet)?;
        Ok(jet)
    }

    /// Buffer-reusing form of [`FamilySpec::eval_jet_in`].
    pub fn eval_jet_into<T: Scalar>(
        &self,
        params: &[T],
        x: T,
        interval: Interval<T>,
        jet: &mut Jet<T>,
    ) -> Result<()> {
        let count = self.param_count();
        if params.len() != count {
            return Err(Error::InvalidArgument(format!(
                "{self} expects {count} parameters, got {}",
                params.len()
            )));
        }
        if !x.is_finite() {
            return Err(Error::overflow("non-finite input"));
        }
        jet.resize(count);
        match self {
            FamilySpec::Pade { m, n } => pade_jet(*m, *n, params, x, jet)?,
            FamilySpec::Mlp { layers } => match layers.as_slice() {
                [layer] => mlp1_jet(layer.width, layer.activation, params, x, jet),
                _ => mlp_jet(layers, params, x, jet),
            },
            FamilySpec::Rbf { centers } => rbf_jet(*centers, params, x, jet),
            FamilySpec::Legendre { degree } => {
                let (scale, shift) = interval.to_reference();
                basis_jet(*degree, params, scale * x + shift, scale, jet, legendre_basis)
            }
            FamilySpec::Poly { degree } => basis_jet(*degree, params, x, T::one(), jet, power_basis),
        }
        if !jet.is_finite() {
            return Err(Error::overflow(format!("{self} evaluation")).at(x.as_f64()));
        }
        Ok(())
    }
}

/// Problem interval `[lo, hi]` seen by a family.
///
/// Only the Legendre family depends on it: its series is expanded in
/// `t = (2x - lo - hi) / (hi - lo)`, which maps the interval onto `[-1, 1]`.
/// On the reference interval this is the identity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval<T> {
    pub lo: T,
    pub hi: T,
}

impl<T: Scalar> Interval<T> {
    pub fn new(lo: T, hi: T) -> Self {
        Self { lo, hi }
    }

    pub fn reference() -> Self {
        Self {
            lo: -T::one(),
            hi: T::one(),
        }
    }

    /// `(scale, shift)` with `t = scale * x + shift`.
    fn to_reference(self) -> (T, T) {
        let width = self.hi - self.lo;
        let two = T::lit(2.0);
        (two / width, -(self.lo + self.hi) / width)
    }
}

/// Parses a structure string such as `Pade-[5/5]` or `MLP-[[8,sigmoid]]`.
pub fn parse_structure(text: &str) -> Result<FamilySpec> {
    let compact: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let syntax = |offset: usize, message: &str| Error::Syntax {
        offset,
        message: message.to_string(),
    };
    let dash = compact
        .find('-')
        .ok_or_else(|| syntax(0, "expected `<family>-<sizes>`"))?;
    let (kind, body) = (&compact[..dash], &compact[dash + 1..]);
    let at = dash + 1;
    let number = |s: &str, offset: usize| -> Result<usize> {
        s.parse::<usize>()
            .map_err(|_| syntax(offset, &format!("expected a nonnegative integer, found `{s}`")))
    };
    let bracketed = |s: &str| -> Result<String> {
        s.strip_prefix('[')
            .and_then(|s| s.strip_suffix(']'))
            .map(str::to_string)
            .ok_or_else(|| syntax(at, "expected `[...]`"))
    };
    let spec = match kind {
        "Pade" => {
            let inner = bracketed(body)?;
            let (m, n) = inner
                .split_once('/')
                .ok_or_else(|| syntax(at + 1, "expected `m/n`"))?;
            FamilySpec::Pade {
                m: number(m, at + 1)?,
                n: number(n, at + 2 + m.len())?,
            }
        }
        "RBF" => FamilySpec::Rbf {
            centers: number(&bracketed(body)?, at + 1)?,
        },
        "Leg" => FamilySpec::Legendre {
            degree: number(body, at)?,
        },
        "Poly" => FamilySpec::Poly {
            degree: number(body, at)?,
        },
        "MLP" => {
            let inner = bracketed(body)?;
            let mut layers = Vec::new();
            let mut rest = inner.as_str();
            let mut offset = at + 1;
            while !rest.is_empty() {
                let close = rest
                    .find(']')
                    .ok_or_else(|| syntax(offset, "unterminated layer"))?;
                let item = rest[..close]
                    .strip_prefix('[')
                    .ok_or_else(|| syntax(offset, "expected `[width,activation]`"))?;
                let (width, act) = item
                    .split_once(',')
                    .ok_or_else(|| syntax(offset + 1, "expected `width,activation`"))?;
                layers.push(Layer {
                    width: number(width, offset + 1)?,
                    activation: act.parse()?,
                });
                rest = &rest[close + 1..];
                offset += close + 1;
                if let Some(r) = rest.strip_prefix(',') {
                    if r.is_empty() {
                        return Err(syntax(offset, "trailing comma"));
                    }
                    rest = r;
                    offset += 1;
                } else if !rest.is_empty() {
                    return Err(syntax(offset, "expected `,` between layers"));
                }
            }
            FamilySpec::Mlp { layers }
        }
        other => {
            return Err(syntax(
                0,
                &format!("unknown family `{other}` (expected Pade, MLP, RBF, Leg or Poly)"),
            ))
        }
    };
    spec.validate()
}

impl FromStr for FamilySpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_structure(s)
    }
}

impl fmt::Display for FamilySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FamilySpec::Pade { m, n } => write!(f, "Pade-[{m}/{n}]"),
            FamilySpec::Mlp { layers } => {
                f.write_str("MLP-[")?;
                for (i, l) in layers.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "[{},{}]", l.width, l.activation.name())?;
                }
                f.write_str("]")
            }
            FamilySpec::Rbf { centers } => write!(f, "RBF-[{centers}]"),
            FamilySpec::Legendre { degree } => write!(f, "Leg-{degree}"),
            FamilySpec::Poly { degree } => write!(f, "Poly-{degree}"),
        }
    }
}

/// Flat trainable parameters, laid out as documented per family.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamVector<T>(pub Vec<T>);

impl<T> Deref for ParamVector<T> {
    type Target = [T];

    fn deref(&self) -> &[T] {
        &self.0
    }
}

impl<T> DerefMut for ParamVector<T> {
    fn deref_mut(&mut self) -> &mut [T] {
        &mut self.0
    }
}

impl<T> From<Vec<T>> for ParamVector<T> {
    fn from(v: Vec<T>) -> Self {
        ParamVector(v)
    }
}

/// Value, x-derivative and parameter gradients of both at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet<T> {
    pub y: T,
    pub dy_dx: T,
    pub grad_y: Vec<T>,
    pub grad_dy_dx: Vec<T>,
}

impl<T: Scalar> Jet<T> {
    pub fn zeros(params: usize) -> Self {
        Self {
            y: T::zero(),
            dy_dx: T::zero(),
            grad_y: vec![T::zero(); params],
            grad_dy_dx: vec![T::zero(); params],
        }
    }

    pub fn len(&self) -> usize {
        self.grad_y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grad_y.is_empty()
    }

    pub(crate) fn resize(&mut self, params: usize) {
        self.grad_y.resize(params, T::zero());
        self.grad_dy_dx.resize(params, T::zero());
    }

    pub fn is_finite(&self) -> bool {
        self.y.is_finite()
            && self.dy_dx.is_finite()
            && self.grad_y.iter().all(|v| v.is_finite())
            && self.grad_dy_dx.iter().all(|v| v.is_finite())
    }
}

fn pade_jet<T: Scalar>(m: usize, n: usize, p: &[T], x: T, jet: &mut Jet<T>) -> Result<()> {
    let (num_w, rest) = p.split_at(m);
    let b1 = rest[0];
    let den_w = &rest[1..1 + n];
    let b2 = rest[1 + n];

    // Horner for value and derivative of b + sum_j w_j x^j.
    let poly = |w: &[T], b: T| {
        let mut v = T::zero();
        let mut d = T::zero();
        for &c in w.iter().rev() {
            d = d * x + v;
            v = v * x + c;
        }
        d = d * x + v;
        v = v * x + b;
        (v, d)
    };
    let (num, dnum) = poly(num_w, b1);
    let (den, dden) = poly(den_w, b2);

    if !(den.abs() >= T::lit(POLE_THRESHOLD)) {
        return Err(Error::Pole {
            x: x.as_f64(),
            denominator: den.as_f64(),
        });
    }
    let inv = T::one() / den;
    let y = num * inv;
    let dy = (dnum - y * dden) * inv;
    jet.y = y;
    jet.dy_dx = dy;

    // power = x^j, dpower = j x^(j-1)
    let mut power = T::one();
    let mut dpower = T::zero();
    for j in 0..=m.max(n) {
        if j > 0 {
            dpower = T::from_usize_lossy(j) * power;
            power *= x;
        }
        let gy_num = power * inv;
        let gdy_num = (dpower - power * dden * inv) * inv;
        let slot_num = if j == 0 { Some(m) } else if j <= m { Some(j - 1) } else { None };
        if let Some(k) = slot_num {
            jet.grad_y[k] = gy_num;
            jet.grad_dy_dx[k] = gdy_num;
        }
        let slot_den = if j == 0 {
            Some(m + 1 + n)
        } else if j <= n {
            Some(m + j)
        } else {
            None
        };
        if let Some(k) = slot_den {
            jet.grad_y[k] = -y * power * inv;
            jet.grad_dy_dx[k] = (y * power * dden * inv - y * dpower - dy * power) * inv;
        }
    }
    Ok(())
}

/// One hidden layer: `y = sum_i v_i f(w_i x + b_1) + b_2`.
fn mlp1_jet<T: Scalar>(width: usize, act: Activation, p: &[T], x: T, jet: &mut Jet<T>) {
    let (w, rest) = p.split_at(width);
    let b1 = rest[0];
    let v = &rest[1..1 + width];
    let b2 = rest[1 + width];
    let out = width + 1;
    let mut y = b2;
    let mut dy = T::zero();
    let mut gy_b1 = T::zero();
    let mut gdy_b1 = T::zero();
    for i in 0..width {
        let (f, f1, f2) = act.eval(w[i] * x + b1);
        y += v[i] * f;
        dy += v[i] * f1 * w[i];
        gy_b1 += v[i] * f1;
        gdy_b1 += v[i] * f2 * w[i];
        jet.grad_y[i] = v[i] * f1 * x;
        jet.grad_dy_dx[i] = v[i] * (f2 * x * w[i] + f1);
        jet.grad_y[out + i] = f;
        jet.grad_dy_dx[out + i] = f1 * w[i];
    }
    jet.grad_y[width] = gy_b1;
    jet.grad_dy_dx[width] = gdy_b1;
    jet.grad_y[2 * width + 1] = T::one();
    jet.grad_dy_dx[2 * width + 1] = T::zero();
    jet.y = y;
    jet.dy_dx = dy;
}

// Forward pass keeps (a, da/dx) per layer; two reverse sweeps seeded at y and
// at dy/dx give both gradient rows.
pub(crate) fn mlp_jet<T: Scalar>(layers: &[Layer], p: &[T], x: T, jet: &mut Jet<T>) {
    struct Cache<T> {
        offset: usize,
        input: usize,
        z_dot: Vec<T>,
        s1: Vec<T>,
        s2: Vec<T>,
    }

    let mut a = vec![x];
    let mut a_dot = vec![T::one()];
    let mut inputs: Vec<(Vec<T>, Vec<T>)> = Vec::with_capacity(layers.len());
    let mut caches: Vec<Cache<T>> = Vec::with_capacity(layers.len());
    let mut offset = 0;
    for layer in layers {
        let input = a.len();
        let w = &p[offset..offset + layer.width * input];
        let bias = p[offset + layer.width * input];
        let mut next = Vec::with_capacity(layer.width);
        let mut next_dot = Vec::with_capacity(layer.width);
        let mut z_dot = Vec::with_capacity(layer.width);
        let mut s1 = Vec::with_capacity(layer.width);
        let mut s2 = Vec::with_capacity(layer.width);
        for row in w.chunks_exact(input) {
            let mut z = bias;
            let mut zd = T::zero();
            for ((&wk, &ak), &adk) in row.iter().zip(&a).zip(&a_dot) {
                z += wk * ak;
                zd += wk * adk;
            }
            let (f, f1, f2) = layer.activation.eval(z);
            next.push(f);
            next_dot.push(f1 * zd);
            z_dot.push(zd);
            s1.push(f1);
            s2.push(f2);
        }
        caches.push(Cache {
            offset,
            input,
            z_dot,
            s1,
            s2,
        });
        inputs.push((std::mem::replace(&mut a, next), std::mem::replace(&mut a_dot, next_dot)));
        offset += layer.width * input + 1;
    }

    let out_w = &p[offset..offset + a.len()];
    let out_b = offset + a.len();
    let mut y = p[out_b];
    let mut dy = T::zero();
    for ((&w, &ak), &adk) in out_w.iter().zip(&a).zip(&a_dot) {
        y += w * ak;
        dy += w * adk;
    }
    jet.y = y;
    jet.dy_dx = dy;

    for (seed_value, grad) in [(true, &mut jet.grad_y), (false, &mut jet.grad_dy_dx)] {
        grad.iter_mut().for_each(|g| *g = T::zero());
        for (k, (&ak, &adk)) in a.iter().zip(&a_dot).enumerate() {
            grad[offset + k] = if seed_value { ak } else { adk };
        }
        grad[out_b] = if seed_value { T::one() } else { T::zero() };

        // adjoints of a and a_dot for the current layer output
        let mut a_bar: Vec<T>;
        let mut a_dot_bar: Vec<T>;
        if seed_value {
            a_bar = out_w.to_vec();
            a_dot_bar = vec![T::zero(); out_w.len()];
        } else {
            a_bar = vec![T::zero(); out_w.len()];
            a_dot_bar = out_w.to_vec();
        }
        for (cache, (a_in, a_dot_in)) in caches.iter().zip(&inputs).rev() {
            let width = cache.s1.len();
            let w = &p[cache.offset..cache.offset + width * cache.input];
            let mut prev_bar = vec![T::zero(); cache.input];
            let mut prev_dot_bar = vec![T::zero(); cache.input];
            let mut bias_bar = T::zero();
            for i in 0..width {
                let z_bar = a_bar[i] * cache.s1[i] + a_dot_bar[i] * cache.s2[i] * cache.z_dot[i];
                let z_dot_bar = a_dot_bar[i] * cache.s1[i];
                bias_bar += z_bar;
                let row = &w[i * cache.input..(i + 1) * cache.input];
                let g = &mut grad[cache.offset + i * cache.input..cache.offset + (i + 1) * cache.input];
                for k in 0..cache.input {
                    g[k] = z_bar * a_in[k] + z_dot_bar * a_dot_in[k];
                    prev_bar[k] += row[k] * z_bar;
                    prev_dot_bar[k] += row[k] * z_dot_bar;
                }
            }
            grad[cache.offset + width * cache.input] = bias_bar;
            a_bar = prev_bar;
            a_dot_bar = prev_dot_bar;
        }
    }
}

fn rbf_jet<T: Scalar>(l: usize, p: &[T], x: T, jet: &mut Jet<T>) {
    let (w, rest) = p.split_at(l);
    let (c, rest) = rest.split_at(l);
    let (rho, rest) = rest.split_at(l);
    let b = rest[0];
    let half = T::lit(0.5);
    let mut y = b;
    let mut dy = T::zero();
    for j in 0..l {
        let sigma = rho[j].exp();
        let d = x - c[j];
        let u = half * d * d / sigma;
        let phi = (-u).exp();
        let slope = phi * d / sigma;
        y += w[j] * phi;
        dy -= w[j] * slope;

        jet.grad_y[j] = phi;
        jet.grad_y[l + j] = w[j] * slope;
        jet.grad_y[2 * l + j] = w[j] * phi * u;

        jet.grad_dy_dx[j] = -slope;
        jet.grad_dy_dx[l + j] = w[j] * phi / sigma * (T::one() - d * d / sigma);
        jet.grad_dy_dx[2 * l + j] = w[j] * slope * (T::one() - u);
    }
    jet.grad_y[3 * l] = T::one();
    jet.grad_dy_dx[3 * l] = T::zero();
    jet.y = y;
    jet.dy_dx = dy;
}

/// Fills `values[j]`, `derivs[j]` with the j-th basis function (j = 0..=degree).
type Basis<T> = fn(T, &mut [T], &mut [T]);

fn power_basis<T: Scalar>(x: T, values: &mut [T], derivs: &mut [T]) {
    values[0] = T::one();
    derivs[0] = T::zero();
    for j in 1..values.len() {
        values[j] = values[j - 1] * x;
        derivs[j] = T::from_usize_lossy(j) * values[j - 1];
    }
}

/// Legendre polynomials by the three-term recurrence
/// `(n+1) P_{n+1} = (2n+1) x P_n - n P_{n-1}`, differentiated term by term.
pub fn legendre_basis<T: Scalar>(x: T, values: &mut [T], derivs: &mut [T]) {
    values[0] = T::one();
    derivs[0] = T::zero();
    if values.len() == 1 {
        return;
    }
    values[1] = x;
    derivs[1] = T::one();
    for n in 1..values.len() - 1 {
        let nf = T::from_usize_lossy(n);
        let a = (nf + nf + T::one()) / (nf + T::one());
        let b = nf / (nf + T::one());
        values[n + 1] = a * x * values[n] - b * values[n - 1];
        derivs[n + 1] = a * (values[n] + x * derivs[n]) - b * derivs[n - 1];
    }
}

/// `y = b + sum_j w_j phi_j(t)` with `t` the (possibly mapped) input and
/// `dt/dx = scale`.
fn basis_jet<T: Scalar>(degree: usize, p: &[T], t: T, scale: T, jet: &mut Jet<T>, basis: Basis<T>) {
    let mut values = [T::zero(); 24];
    let mut derivs = [T::zero(); 24];
    let mut heap;
    let (values, derivs) = if degree < 24 {
        (&mut values[..=degree], &mut derivs[..=degree])
    } else {
        heap = (vec![T::zero(); degree + 1], vec![T::zero(); degree + 1]);
        (&mut heap.0[..], &mut heap.1[..])
    };
    basis(t, values, derivs);
    let mut y = p[degree];
    let mut dy = T::zero();
    for j in 1..=degree {
        let d = derivs[j] * scale;
        y += p[j - 1] * values[j];
        dy += p[j - 1] * d;
        jet.grad_y[j - 1] = values[j];
        jet.grad_dy_dx[j - 1] = d;
    }
    jet.grad_y[degree] = T::one();
    jet.grad_dy_dx[degree] = T::zero();
    jet.y = y;
    jet.dy_dx = dy;
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(s: &str) -> FamilySpec {
        parse_structure(s).unwrap()
    }

    #[test]
    fn parses_reference_structures() {
        assert_eq!(spec("Pade-[5/5]"), FamilySpec::Pade { m: 5, n: 5 });
        assert_eq!(
            spec("MLP-[[32,sigmoid],[32,sigmoid]]"),
            FamilySpec::Mlp {
                layers: vec![
                    Layer {
                        width: 32,
                        activation: Activation::Sigmoid
                    };
                    2
                ]
            }
        );
        assert_eq!(spec("RBF-[ 16 ]"), FamilySpec::Rbf { centers: 16 });
        assert_eq!(spec("Leg-15"), FamilySpec::Legendre { degree: 15 });
        assert_eq!(spec("Poly-10"), FamilySpec::Poly { degree: 10 });
    }

    #[test]
    fn structure_errors() {
        assert!(matches!(parse_structure("RBF-[0]"), Err(Error::InvalidStructure(_))));
        assert!(matches!(parse_structure("Leg-0"), Err(Error::InvalidStructure(_))));
        assert!(matches!(
            parse_structure("MLP-[[4,relu]]"),
            Err(Error::InvalidStructure(_))
        ));
        assert!(matches!(
            parse_structure("MLP-[[0,tanh]]"),
            Err(Error::InvalidStructure(_))
        ));
        assert!(matches!(parse_structure("MLP-[]"), Err(Error::InvalidStructure(_))));
        for bad in ["Pade[5/5]", "Pade-[5,5]", "Pade-5/5", "Spline-3", "MLP-[[4,tanh],]", "Leg-x", "RBF-4"] {
            assert!(matches!(parse_structure(bad), Err(Error::Syntax { .. })), "{bad}");
        }
    }

    #[test]
    fn display_round_trips() {
        for s in ["Pade-[0/3]", "MLP-[[3,tanh],[2,sigmoid]]", "RBF-[8]", "Leg-4", "Poly-1"] {
            assert_eq!(spec(s).to_string(), s);
        }
    }

    #[test]
    fn param_counts() {
        assert_eq!(spec("Pade-[5/5]").param_count(), 12);
        assert_eq!(spec("MLP-[[16,sigmoid]]").param_count(), 34);
        assert_eq!(spec("RBF-[16]").param_count(), 49);
        // 1*3+1, 3*3+1, 3+1
        assert_eq!(spec("MLP-[[3,tanh],[3,tanh]]").param_count(), 18);
    }

    #[test]
    fn init_is_deterministic_and_follows_rules() {
        let pade = spec("Pade-[5/5]");
        let a = pade.init_params::<f64>(7, -1.0, 1.0);
        assert_eq!(a, pade.init_params(7, -1.0, 1.0));
        assert_ne!(a, pade.init_params(8, -1.0, 1.0));
        assert_eq!(a[11], 1.0);
        assert_eq!(pade.init_params::<f64>(123, 0.0, 1.0)[11], 1.0);

        let rbf = spec("RBF-[8]");
        let p = rbf.init_params::<f64>(1, -1.0, 1.0);
        for i in 0..8 {
            let want = -1.0 + (i as f64 + 0.5) * 0.25;
            assert!((p[8 + i] - want).abs() < 1e-15);
            assert!((p[16 + i].exp() - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn single_layer_fast_path_matches_general_pass() {
        for text in ["MLP-[[5,sigmoid]]", "MLP-[[3,tanh]]"] {
            let s = spec(text);
            let FamilySpec::Mlp { layers } = &s else { unreachable!() };
            let p: Vec<f64> = (0..s.param_count()).map(|k| ((k * 37 % 11) as f64 - 5.0) / 7.0).collect();
            for x in [-0.9, -0.2, 0.0, 0.4, 1.3] {
                let fast = s.eval_jet(&p, x).unwrap();
                let mut general = Jet::zeros(s.param_count());
                mlp_jet(layers, &p, x, &mut general);
                assert!((fast.y - general.y).abs() < 1e-14);
                assert!((fast.dy_dx - general.dy_dx).abs() < 1e-14);
                for k in 0..p.len() {
                    assert!((fast.grad_y[k] - general.grad_y[k]).abs() < 1e-14, "{text} {k}");
                    assert!((fast.grad_dy_dx[k] - general.grad_dy_dx[k]).abs() < 1e-14, "{text} {k}");
                }
            }
        }
    }

    #[test]
    fn constant_pade() {
        let s = spec("Pade-[2/2]");
        let jet = s.eval_jet(&[0.0, 0.0, 1.0, 0.0, 0.0, 2.0], 0.7).unwrap();
        assert_eq!((jet.y, jet.dy_dx), (0.5, 0.0));
    }

    #[test]
    fn pade_pole() {
        let s = spec("Pade-[3/1]");
        let err = s.eval_jet(&[1.0, 1.0, 1.0, 1.0, -1.0, 1.0], 1.0).unwrap_err();
        assert_eq!(
            err,
            Error::Pole {
                x: 1.0,
                denominator: 0.0
            }
        );
    }

    #[test]
    fn zero_mlp_and_output_bias() {
        let s = spec("MLP-[[1,sigmoid]]");
        let mut p = vec![0.0; 4];
        assert_eq!(s.eval_jet(&p, 3.0).unwrap().y, 0.0);
        p[3] = 0.25;
        assert_eq!(s.eval_jet(&p, 3.0).unwrap().y, 0.25);
        // output weight picks up sigmoid(0) = 1/2
        p[2] = 1.0;
        assert_eq!(s.eval_jet(&p, 3.0).unwrap().y, 0.75);
    }

    #[test]
    fn legendre_second_order_at_zero() {
        let jet = spec("Leg-2").eval_jet(&[0.0, 1.0, 0.0], 0.0).unwrap();
        assert_eq!(jet.y, -0.5);
        assert_eq!(jet.dy_dx, 0.0);
    }

    #[test]
    fn wrong_param_length() {
        assert!(matches!(
            spec("Poly-3").eval_jet(&[0.0; 3], 0.0),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn overflow_is_reported() {
        let s = spec("Poly-3");
        assert!(matches!(
            s.eval_jet(&[0.0, 0.0, 1.0, 0.0], 1e200),
            Err(Error::Overflow { .. })
        ));
    }
}
