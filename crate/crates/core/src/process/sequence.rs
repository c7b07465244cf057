use serde::{Deserialize, Serialize};

/// One coordinate sequence of an entry: integer symbols for discrete
/// processes, reals for the Gaussian process.
#[derive(Clone, Debug, PartialEq)]
pub enum Sequence {
    Symbols(Vec<u32>),
    Reals(Vec<f64>),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SeqRef<'a> {
    Symbols(&'a [u32]),
    Reals(&'a [f64]),
}

impl Sequence {
    pub fn len(&self) -> usize {
        match self {
            Sequence::Symbols(s) => s.len(),
            Sequence::Reals(r) => r.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn as_ref(&self) -> SeqRef<'_> {
        match self {
            Sequence::Symbols(s) => SeqRef::Symbols(s),
            Sequence::Reals(r) => SeqRef::Reals(r),
        }
    }

    pub fn symbols(&self) -> Option<&[u32]> {
        match self {
            Sequence::Symbols(s) => Some(s),
            Sequence::Reals(_) => None,
        }
    }

    pub fn reals(&self) -> Option<&[f64]> {
        match self {
            Sequence::Reals(r) => Some(r),
            Sequence::Symbols(_) => None,
        }
    }
}

impl<'a> SeqRef<'a> {
    pub fn len(&self) -> usize {
        match self {
            SeqRef::Symbols(s) => s.len(),
            SeqRef::Reals(r) => r.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl<'a> From<&'a [u32]> for SeqRef<'a> {
    fn from(s: &'a [u32]) -> Self {
        SeqRef::Symbols(s)
    }
}

impl<'a> From<&'a [f64]> for SeqRef<'a> {
    fn from(r: &'a [f64]) -> Self {
        SeqRef::Reals(r)
    }
}

/// Which coordinate of the pair process.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    First,
    Second,
}

impl Side {
    pub fn number(self) -> u8 {
        match self {
            Side::First => 1,
            Side::Second => 2,
        }
    }
}
