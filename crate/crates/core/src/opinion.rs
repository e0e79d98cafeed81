//! Binary opinions and opinion vectors.

use std::fmt;
use std::ops::{Index, Neg};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::DynamicsError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(i8)]
pub enum Opinion {
    Minus = -1,
    Plus = 1,
}

impl Opinion {
    #[inline]
    pub fn value(self) -> i8 {
        self as i8
    }

    pub fn as_char(self) -> char {
        match self {
            Opinion::Plus => '+',
            Opinion::Minus => '-',
        }
    }

    pub fn from_char(c: char) -> Result<Self, DynamicsError> {
        match c {
            '+' => Ok(Opinion::Plus),
            '-' => Ok(Opinion::Minus),
            other => Err(DynamicsError::BadOpinion(other)),
        }
    }

    pub fn from_sign(v: i8) -> Option<Self> {
        match v {
            1 => Some(Opinion::Plus),
            -1 => Some(Opinion::Minus),
            _ => None,
        }
    }
}

impl Neg for Opinion {
    type Output = Opinion;

    #[inline]
    fn neg(self) -> Opinion {
        match self {
            Opinion::Plus => Opinion::Minus,
            Opinion::Minus => Opinion::Plus,
        }
    }
}

/// One opinion per vertex. Serializes as a `+`/`-` string, index 0 leftmost.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct OpinionState(Vec<Opinion>);

impl OpinionState {
    pub fn new(opinions: Vec<Opinion>) -> Result<Self, DynamicsError> {
        if opinions.is_empty() {
            return Err(DynamicsError::Empty);
        }
        Ok(OpinionState(opinions))
    }

    pub fn uniform(n: usize, value: Opinion) -> Self {
        assert!(n > 0, "opinion vector must be nonempty");
        OpinionState(vec![value; n])
    }

    /// Builds from `±1` integers, as the model is usually written down.
    pub fn from_signs(signs: &[i8]) -> Result<Self, DynamicsError> {
        signs
            .iter()
            .map(|&s| Opinion::from_sign(s).ok_or(DynamicsError::BadOpinion(s as u8 as char)))
            .collect::<Result<Vec<_>, _>>()
            .and_then(Self::new)
    }

    /// Decodes a bitmask: bit `b` set means vertex `b` holds `+1`.
    pub fn from_code(code: u32, n: usize) -> Self {
        assert!(n > 0 && n <= 32, "bitmask codes cover 1..=32 vertices");
        OpinionState(
            (0..n)
                .map(|b| if code >> b & 1 == 1 { Opinion::Plus } else { Opinion::Minus })
                .collect(),
        )
    }

    pub fn to_code(&self) -> u32 {
        assert!(self.len() <= 32, "bitmask codes cover at most 32 vertices");
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &o)| o == Opinion::Plus)
            .fold(0u32, |acc, (b, _)| acc | 1 << b)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.0.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[Opinion] {
        &self.0
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: Opinion) {
        self.0[i] = value;
    }

    /// All entries equal.
    pub fn is_consensus(&self) -> bool {
        self.0.windows(2).all(|w| w[0] == w[1])
    }

    pub fn count_plus(&self) -> usize {
        self.0.iter().filter(|&&o| o == Opinion::Plus).count()
    }

    pub fn negated(&self) -> Self {
        OpinionState(self.0.iter().map(|&o| -o).collect())
    }

    pub fn check_len(&self, n: usize) -> Result<(), DynamicsError> {
        if self.len() == n {
            Ok(())
        } else {
            Err(DynamicsError::LengthMismatch {
                expected: n,
                got: self.len(),
            })
        }
    }
}

impl Index<usize> for OpinionState {
    type Output = Opinion;

    #[inline]
    fn index(&self, i: usize) -> &Opinion {
        &self.0[i]
    }
}

impl fmt::Display for OpinionState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.iter().try_for_each(|o| write!(f, "{}", o.as_char()))
    }
}

impl FromStr for OpinionState {
    type Err = DynamicsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.trim()
            .chars()
            .map(Opinion::from_char)
            .collect::<Result<Vec<_>, _>>()
            .and_then(Self::new)
    }
}

impl Serialize for OpinionState {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for OpinionState {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
