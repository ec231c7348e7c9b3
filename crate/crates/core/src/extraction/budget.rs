use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Named relative uncertainties of the p coefficients, in percent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyBudget {
    pub entries: Vec<BudgetEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BudgetEntry {
    pub name: String,
    pub percent: f64,
}

pub const STATISTICAL: &str = "statistical";

impl UncertaintyBudget {
    pub fn new(entries: Vec<(&str, f64)>) -> Result<Self> {
        let entries: Vec<BudgetEntry> =
            entries.into_iter().map(|(n, p)| BudgetEntry { name: n.to_string(), percent: p }).collect();
        let b = UncertaintyBudget { entries };
        b.validate()?;
        Ok(b)
    }

    /// The seven contributions of the Rb 5D measurement.
    pub fn rb87_5d() -> Self {
        Self::new(vec![
            (STATISTICAL, 0.2),
            ("electric_field", 0.3),
            ("residual_magnetic_field", 0.1),
            ("line_shape_model", 0.03),
            ("optical_pumping", 0.07),
            ("probe_polarization", 0.1),
            ("ac_stark", 0.1),
        ])
        .expect("valid budget")
    }

    pub fn zero() -> Self {
        UncertaintyBudget { entries: Vec::new() }
    }

    pub fn validate(&self) -> Result<()> {
        for e in &self.entries {
            if !(e.percent.is_finite() && e.percent >= 0.0) {
                return Err(Error::InvalidConfig(format!("budget entry {} = {}", e.name, e.percent)));
            }
        }
        Ok(())
    }

    /// Quadrature sum of every entry except the statistical one, percent.
    pub fn systematic_percent(&self) -> f64 {
        quadrature(self.entries.iter().filter(|e| e.name != STATISTICAL).map(|e| e.percent))
    }

    pub fn scaled(&self, factor: f64) -> Self {
        UncertaintyBudget {
            entries: self
                .entries
                .iter()
                .map(|e| BudgetEntry { name: e.name.clone(), percent: e.percent * factor })
                .collect(),
        }
    }
}

fn quadrature(values: impl Iterator<Item = f64>) -> f64 {
    values.map(|v| v * v).sum::<f64>().sqrt()
}

/// Total relative uncertainty, percent.
pub fn quadrature_budget(budget: &UncertaintyBudget) -> f64 {
    quadrature(budget.entries.iter().map(|e| e.percent))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_total() {
        let total = quadrature_budget(&UncertaintyBudget::rb87_5d());
        assert!((total - 0.41).abs() < 0.005, "{total}");
        assert_eq!(quadrature_budget(&UncertaintyBudget::zero()), 0.0);
        let one = UncertaintyBudget::new(vec![("x", 0.37)]).unwrap();
        assert_eq!(quadrature_budget(&one), 0.37);
        assert!(UncertaintyBudget::new(vec![("x", -1.0)]).is_err());
    }
}
