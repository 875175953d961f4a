use std::io;

use fixprice_core::{
    DistributionError, GameError, MeasureError, MechanismError, NumericsError, SpecError, WorstCaseError,
};
use thiserror::Error;

/// Exit code for malformed or invalid input.
pub const EXIT_INPUT: u8 = 2;
/// Exit code for numerical failure such as non-convergent quadrature.
pub const EXIT_NUMERIC: u8 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("numerical failure: {0}")]
    Numeric(String),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Numeric(_) => EXIT_NUMERIC,
            CliError::Input(_) | CliError::Io { .. } => EXIT_INPUT,
        }
    }

    pub fn input(message: impl Into<String>) -> Self {
        CliError::Input(message.into())
    }

    /// A spec that failed to parse, labelled with the flag it came from. The
    /// message already carries the line and column.
    pub fn spec(flag: &str, err: SpecError) -> Self {
        CliError::Input(format!("{flag}: {err}"))
    }
}

impl From<NumericsError> for CliError {
    fn from(e: NumericsError) -> Self {
        match e {
            NumericsError::InvalidConfig(_) => CliError::Input(e.to_string()),
            _ => CliError::Numeric(e.to_string()),
        }
    }
}

impl From<DistributionError> for CliError {
    fn from(e: DistributionError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<MeasureError> for CliError {
    fn from(e: MeasureError) -> Self {
        match e {
            MeasureError::Numerics(n) => n.into(),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<MechanismError> for CliError {
    fn from(e: MechanismError) -> Self {
        match e {
            MechanismError::Measure(m) => m.into(),
            MechanismError::Numerics(n) => n.into(),
            MechanismError::Distribution(d) => d.into(),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<WorstCaseError> for CliError {
    fn from(e: WorstCaseError) -> Self {
        match e {
            WorstCaseError::Distribution(d) => d.into(),
            WorstCaseError::Measure(m) => m.into(),
            WorstCaseError::Mechanism(m) => m.into(),
            WorstCaseError::SingularDenominator { .. } => CliError::Numeric(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<GameError> for CliError {
    fn from(e: GameError) -> Self {
        match e {
            GameError::Distribution(d) => d.into(),
            GameError::Measure(m) => m.into(),
            GameError::Numerics(n) => n.into(),
            _ => CliError::Input(e.to_string()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numeric_failures_map_to_three() {
        let e: CliError = NumericsError::NonConvergence {
            estimate: 0.0,
            error: 1.0,
            subdivisions: 10,
        }
        .into();
        assert_eq!(e.exit_code(), EXIT_NUMERIC);
        let e: CliError = MechanismError::Measure(MeasureError::Numerics(NumericsError::NotBracketed {
            q: 0.5,
            at_hi: 0.1,
        }))
        .into();
        assert_eq!(e.exit_code(), EXIT_NUMERIC);
    }

    #[test]
    fn bad_configuration_is_input() {
        let e: CliError = NumericsError::InvalidConfig("abs_tol must be positive").into();
        assert_eq!(e.exit_code(), EXIT_INPUT);
        let e: CliError = WorstCaseError::SequenceIndex { n: 1 }.into();
        assert_eq!(e.exit_code(), EXIT_INPUT);
    }
}
