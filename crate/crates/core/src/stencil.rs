//! Central finite-difference stencils on a uniform grid.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StencilOrder {
    Second,
    Fourth,
    #[default]
    Sixth,
}

impl StencilOrder {
    /// Number of neighbours on each side.
    pub fn radius(self) -> usize {
        match self {
            StencilOrder::Second => 1,
            StencilOrder::Fourth => 2,
            StencilOrder::Sixth => 3,
        }
    }

    pub fn accuracy(self) -> u32 {
        2 * self.radius() as u32
    }

    /// First-derivative weights for offsets `-r..=r`, to be divided by `h`.
    pub fn first(self) -> &'static [f64] {
        match self {
            StencilOrder::Second => &[-0.5, 0.0, 0.5],
            StencilOrder::Fourth => &[1.0 / 12.0, -2.0 / 3.0, 0.0, 2.0 / 3.0, -1.0 / 12.0],
            StencilOrder::Sixth => &[
                -1.0 / 60.0,
                3.0 / 20.0,
                -3.0 / 4.0,
                0.0,
                3.0 / 4.0,
                -3.0 / 20.0,
                1.0 / 60.0,
            ],
        }
    }

    /// Second-derivative weights for offsets `-r..=r`, to be divided by `h^2`.
    pub fn second(self) -> &'static [f64] {
        match self {
            StencilOrder::Second => &[1.0, -2.0, 1.0],
            StencilOrder::Fourth => &[-1.0 / 12.0, 4.0 / 3.0, -5.0 / 2.0, 4.0 / 3.0, -1.0 / 12.0],
            StencilOrder::Sixth => &[
                1.0 / 90.0,
                -3.0 / 20.0,
                3.0 / 2.0,
                -49.0 / 18.0,
                3.0 / 2.0,
                -3.0 / 20.0,
                1.0 / 90.0,
            ],
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "2" | "second" => Some(StencilOrder::Second),
            "4" | "fourth" => Some(StencilOrder::Fourth),
            "6" | "sixth" => Some(StencilOrder::Sixth),
            _ => None,
        }
    }
}

/// Derivatives at node `i` of an array padded with `r` ghost values on each
/// side (`ext[i + r]` is node `i`).
#[inline]
pub fn derivatives(order: StencilOrder, ext: &[f64], i: usize, h: f64) -> (f64, f64) {
    let d1 = order.first();
    let d2 = order.second();
    let window = &ext[i..i + d1.len()];
    let mut first = 0.0;
    let mut second = 0.0;
    for ((&f, &c1), &c2) in window.iter().zip(d1).zip(d2) {
        first += c1 * f;
        second += c2 * f;
    }
    (first / h, second / (h * h))
}
