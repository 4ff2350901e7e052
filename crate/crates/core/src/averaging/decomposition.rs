use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::{fourier_transform, GridFunction};
use crate::varieties::{Variety, VarietyKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Part {
    /// `K(m) = sigma^v(m) - delta_0(m)`, so that `sigma = K^ + 1`.
    K,
    /// `H(m) = C^v(m) - (|C|/q^d) delta_0(m)`, so that `1_C = H^ + |C|/q^d`.
    H,
}

/// A constant part plus a frequency-side part vanishing at the origin.
#[derive(Clone, Debug)]
pub struct Decomposition {
    pub which: Part,
    pub smooth: f64,
    pub oscillatory: GridFunction,
}

pub fn decompose(v: &Variety, which: Part) -> Result<Decomposition> {
    let sigma = v.sigma_check();
    let (smooth, scale) = match which {
        Part::K => (1.0, 1.0),
        Part::H => {
            if *v.kind() != VarietyKind::Cone {
                return Err(Error::InvalidParameter(
                    "the H decomposition is defined for the cone only".into(),
                ));
            }
            let density = v.len() as f64 / v.grid().len() as f64;
            (density, density)
        }
    };
    let mut values: Vec<Complex64> = sigma.values().iter().map(|z| z * scale).collect();
    values[0] = Complex64::new(0.0, 0.0);
    let oscillatory = GridFunction::new(v.grid(), sigma.side(), values)?;
    Ok(Decomposition {
        which,
        smooth,
        oscillatory,
    })
}

impl Decomposition {
    /// `(oscillatory)^ + smooth` on `(F_q^d, dx)`.
    pub fn reconstruct(&self) -> Result<GridFunction> {
        let hat = fourier_transform(&self.oscillatory)?;
        Ok(hat.map(|z| z + self.smooth))
    }

    /// `max_m |K(m)|` or `max_m |H(m)|`.
    pub fn max_oscillation(&self) -> f64 {
        self.oscillatory
            .values()
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// `max_x |(oscillatory)^(x)|`.
    pub fn max_space_side(&self) -> Result<f64> {
        Ok(fourier_transform(&self.oscillatory)?
            .values()
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max))
    }
}
