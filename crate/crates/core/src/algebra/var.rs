//! Symbolic variables.
//!
//! A variable is a packed `u16`: the top bits hold the kind, the low ten
//! bits the index. Numeric order of the packed value is the canonical
//! variable order, so coordinates sort before momenta and both before the
//! constants of the system.

use std::fmt;

const SHIFT: u16 = 10;
const MASK: u16 = (1 << SHIFT) - 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VarKind {
    /// Coordinate `w_i`.
    W = 0,
    /// Momentum `p_i`.
    P = 1,
    /// Shifted coordinate `v_i`.
    V = 2,
    /// Momentum conjugate to `v_i`.
    Pv = 3,
    /// Field component `u_i`.
    U = 4,
    /// Coefficient `c_j` of the spectral curve.
    C = 5,
    /// Level constant `d_i`.
    D = 6,
    /// Coefficient `m_i` of `m(mu)`.
    M = 7,
    /// Finite root `lambda` of `m`.
    Lambda = 8,
}

impl VarKind {
    fn from_bits(b: u16) -> VarKind {
        match b {
            0 => VarKind::W,
            1 => VarKind::P,
            2 => VarKind::V,
            3 => VarKind::Pv,
            4 => VarKind::U,
            5 => VarKind::C,
            6 => VarKind::D,
            7 => VarKind::M,
            _ => VarKind::Lambda,
        }
    }

    fn prefix(self) -> &'static str {
        match self {
            VarKind::W => "w",
            VarKind::P => "p",
            VarKind::V => "v",
            VarKind::Pv => "pv",
            VarKind::U => "u",
            VarKind::C => "c",
            VarKind::D => "d",
            VarKind::M => "m",
            VarKind::Lambda => "lambda",
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(u16);

impl Var {
    pub fn new(kind: VarKind, index: usize) -> Var {
        assert!(index <= MASK as usize, "variable index {index} out of range");
        Var(((kind as u16) << SHIFT) | index as u16)
    }

    pub fn w(i: usize) -> Var {
        Var::new(VarKind::W, i)
    }
    pub fn p(i: usize) -> Var {
        Var::new(VarKind::P, i)
    }
    pub fn v(i: usize) -> Var {
        Var::new(VarKind::V, i)
    }
    pub fn pv(i: usize) -> Var {
        Var::new(VarKind::Pv, i)
    }
    pub fn u(i: usize) -> Var {
        Var::new(VarKind::U, i)
    }
    pub fn c(j: usize) -> Var {
        Var::new(VarKind::C, j)
    }
    pub fn d(i: usize) -> Var {
        Var::new(VarKind::D, i)
    }
    pub fn m(i: usize) -> Var {
        Var::new(VarKind::M, i)
    }
    pub fn lambda() -> Var {
        Var::new(VarKind::Lambda, 0)
    }

    pub fn kind(self) -> VarKind {
        VarKind::from_bits(self.0 >> SHIFT)
    }

    pub fn index(self) -> usize {
        (self.0 & MASK) as usize
    }

    /// Phase-space variables (coordinates and momenta) as opposed to parameters.
    pub fn is_phase(self) -> bool {
        matches!(self.kind(), VarKind::W | VarKind::P | VarKind::V | VarKind::Pv)
    }

    /// Parse names like `w3`, `p12`, `c13`, `pv2`, `lambda`.
    pub fn parse(s: &str) -> Option<Var> {
        let s = s.trim();
        if s == "lambda" {
            return Some(Var::lambda());
        }
        let split = s.find(|c: char| c.is_ascii_digit())?;
        let (pre, num) = s.split_at(split);
        let idx: usize = num.parse().ok()?;
        let kind = match pre {
            "w" => VarKind::W,
            "p" => VarKind::P,
            "v" => VarKind::V,
            "pv" => VarKind::Pv,
            "u" => VarKind::U,
            "c" => VarKind::C,
            "d" => VarKind::D,
            "m" => VarKind::M,
            _ => return None,
        };
        if idx > MASK as usize {
            return None;
        }
        Some(Var::new(kind, idx))
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind() {
            VarKind::Lambda => write!(f, "lambda"),
            k => write!(f, "{}{}", k.prefix(), self.index()),
        }
    }
}

impl fmt::Debug for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}
