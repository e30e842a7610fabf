use std::iter::Sum;
use std::ops::{Add, AddAssign};

use serde::{Deserialize, Serialize};

/// Keystroke counters for one or more evaluated texts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct KeystrokeLedger {
    pub keys_auto: u64,
    pub keys_manual: u64,
    pub tokens_counted: u64,
    /// Steps where the true token was among the suggestions.
    pub hits: u64,
}

impl KeystrokeLedger {
    pub fn new(keys_manual: u64, keys_auto: u64) -> Self {
        Self { keys_auto, keys_manual, ..Self::default() }
    }

    /// `hits <= tokens_counted` and auto cost within `k_max` per step of manual.
    pub fn is_consistent(&self, k_max: u64) -> bool {
        self.hits <= self.tokens_counted && self.keys_auto <= self.keys_manual + self.tokens_counted * k_max
    }
}

impl Add for KeystrokeLedger {
    type Output = Self;

    fn add(mut self, rhs: Self) -> Self {
        self += rhs;
        self
    }
}

impl AddAssign for KeystrokeLedger {
    fn add_assign(&mut self, rhs: Self) {
        self.keys_auto += rhs.keys_auto;
        self.keys_manual += rhs.keys_manual;
        self.tokens_counted += rhs.tokens_counted;
        self.hits += rhs.hits;
    }
}

impl Sum for KeystrokeLedger {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::default(), Add::add)
    }
}
