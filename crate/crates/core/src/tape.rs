//! Flat `f64` evaluation of symbolic expressions.
//!
//! Constants are folded into the term coefficients at compile time; the
//! remaining variables are mapped to slots of an input slice.

use crate::algebra::rational::to_f64;
use crate::algebra::{MultiPoly, RationalExpr, Var};
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
struct PolyTape {
    coeffs: Vec<f64>,
    /// `starts[t]..starts[t+1]` indexes `factors` for term `t`.
    starts: Vec<u32>,
    factors: Vec<(u16, i16)>,
}

impl PolyTape {
    fn compile(p: &MultiPoly, slots: &[Var], consts: &dyn Fn(Var) -> Option<f64>) -> Result<PolyTape> {
        let mut coeffs = Vec::with_capacity(p.len());
        let mut starts = vec![0u32];
        let mut factors = Vec::new();
        for (m, c) in p.terms() {
            let mut k = to_f64(c);
            for &(v, e) in m.factors() {
                match slots.iter().position(|&s| s == v) {
                    Some(i) => factors.push((i as u16, e as i16)),
                    None => {
                        let x = consts(v).ok_or_else(|| Error::Config(format!("no value for {v}")))?;
                        k *= x.powi(e);
                    }
                }
            }
            coeffs.push(k);
            starts.push(factors.len() as u32);
        }
        Ok(PolyTape { coeffs, starts, factors })
    }

    fn eval(&self, x: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (t, k) in self.coeffs.iter().enumerate() {
            let mut v = *k;
            for &(i, e) in &self.factors[self.starts[t] as usize..self.starts[t + 1] as usize] {
                v *= match e {
                    1 => x[i as usize],
                    2 => x[i as usize] * x[i as usize],
                    _ => x[i as usize].powi(e as i32),
                };
            }
            acc += v;
        }
        acc
    }

    /// Sum of the absolute values of the terms.
    fn eval_abs(&self, x: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (t, k) in self.coeffs.iter().enumerate() {
            let mut v = k.abs();
            for &(i, e) in &self.factors[self.starts[t] as usize..self.starts[t + 1] as usize] {
                v *= x[i as usize].abs().powi(e as i32);
            }
            acc += v;
        }
        acc
    }
}

/// A compiled rational expression.
#[derive(Clone, Debug)]
pub struct Compiled {
    num: PolyTape,
    den: Option<PolyTape>,
}

impl Compiled {
    pub fn new(e: &RationalExpr, slots: &[Var], consts: &dyn Fn(Var) -> Option<f64>) -> Result<Compiled> {
        let num = PolyTape::compile(e.num(), slots, consts)?;
        let den = if e.is_poly() { None } else { Some(PolyTape::compile(e.den(), slots, consts)?) };
        Ok(Compiled { num, den })
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let n = self.num.eval(x);
        match &self.den {
            None => n,
            Some(d) => n / d.eval(x),
        }
    }

    /// Magnitude of the terms: `sum |term|` of the numerator over `|den|`.
    pub fn eval_abs(&self, x: &[f64]) -> f64 {
        let n = self.num.eval_abs(x);
        match &self.den {
            None => n,
            Some(d) => n / d.eval(x).abs(),
        }
    }

    pub fn terms(&self) -> usize {
        self.num.coeffs.len() + self.den.as_ref().map_or(0, |d| d.coeffs.len())
    }
}

/// A vector field or any list of expressions over the same slots.
#[derive(Clone, Debug)]
pub struct CompiledVec {
    items: Vec<Compiled>,
}

impl CompiledVec {
    pub fn new(es: &[RationalExpr], slots: &[Var], consts: &dyn Fn(Var) -> Option<f64>) -> Result<CompiledVec> {
        Ok(CompiledVec { items: es.iter().map(|e| Compiled::new(e, slots, consts)).collect::<Result<_>>()? })
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        for (o, c) in out.iter_mut().zip(&self.items) {
            *o = c.eval(x);
        }
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        self.items.iter().map(|c| c.eval(x)).collect()
    }

    pub fn eval_abs(&self, x: &[f64]) -> Vec<f64> {
        self.items.iter().map(|c| c.eval_abs(x)).collect()
    }
}
