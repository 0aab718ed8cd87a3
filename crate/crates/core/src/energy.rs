use std::fmt;

/// How an energy value was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    ClosedForm,
    Quadrature,
    Discrete,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::ClosedForm => "closed-form",
            Provenance::Quadrature => "quadrature",
            Provenance::Discrete => "discrete",
        })
    }
}

/// Dirichlet + surface split of a Mumford-Shah type energy.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyBreakdown {
    pub dirichlet: f64,
    pub surface: f64,
    pub total: f64,
    pub provenance: Provenance,
}

impl EnergyBreakdown {
    pub fn new(dirichlet: f64, surface: f64, provenance: Provenance) -> Self {
        Self {
            dirichlet,
            surface,
            total: dirichlet + surface,
            provenance,
        }
    }
}
