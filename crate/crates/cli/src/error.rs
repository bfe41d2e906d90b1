use ucscreen::milp::MilpStatus;
use ucscreen::mplp::MplpError;
use ucscreen::multi_area::AreaError;
use ucscreen::screening::ScreeningError;
use ucscreen::uc_models::UcError;
use ucscreen::validation::ValidationError;

/// Command failure; the variant fixes the process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, missing or malformed input files. Exit 1.
    Usage(String),
    /// Output could not be written. Exit 1.
    Io(String),
    /// Solver or numerical failure that is not an infeasible model. Exit 1.
    Failed(String),
    /// The model has no feasible dispatch. Exit 2.
    Infeasible(String),
    /// Region enumeration hit the cap, or a partial store was refused. Exit 3.
    Overflow(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Io(_) | CliError::Failed(_) => 1,
            CliError::Infeasible(_) => 2,
            CliError::Overflow(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::Failed(m) => write!(f, "{m}"),
            CliError::Infeasible(m) => write!(f, "infeasible: {m}"),
            CliError::Overflow(m) => write!(f, "region cap reached: {m}"),
        }
    }
}

impl From<ScreeningError> for CliError {
    fn from(e: ScreeningError) -> Self {
        match e {
            ScreeningError::Infeasible { .. } | ScreeningError::ReserveUnattainable { .. } => {
                CliError::Infeasible(e.to_string())
            }
            ScreeningError::ForecastLength { .. } | ScreeningError::Uncertainty(_) | ScreeningError::NoParticipation => {
                CliError::Usage(e.to_string())
            }
            ScreeningError::Stalled { .. } => CliError::Failed(e.to_string()),
        }
    }
}

impl From<MplpError> for CliError {
    fn from(e: MplpError) -> Self {
        match e {
            MplpError::Screening(s) => s.into(),
            MplpError::Lp(_) | MplpError::NotAffine(_) | MplpError::NotRhsParametric(_) => {
                CliError::Failed(e.to_string())
            }
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<UcError> for CliError {
    fn from(e: UcError) -> Self {
        match e {
            UcError::NegativeTightenedLimit(_) => CliError::Infeasible(e.to_string()),
            UcError::Milp(_) => CliError::Failed(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<AreaError> for CliError {
    fn from(e: AreaError) -> Self {
        match e {
            AreaError::Infeasible { .. } => CliError::Infeasible(e.to_string()),
            AreaError::Stalled { .. } | AreaError::Milp(_) => CliError::Failed(e.to_string()),
            AreaError::Uc(u) => u.into(),
            AreaError::Mplp(m) => m.into(),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<ValidationError> for CliError {
    fn from(e: ValidationError) -> Self {
        match e {
            ValidationError::ReducedUnsolved {
                status: MilpStatus::Infeasible,
                ..
            } => CliError::Infeasible(e.to_string()),
            ValidationError::NoSamples | ValidationError::WrongUncertainty { .. } => CliError::Usage(e.to_string()),
            ValidationError::Uc(u) => u.into(),
            ValidationError::Screening(s) => s.into(),
            ValidationError::Mplp(m) => m.into(),
            _ => CliError::Failed(e.to_string()),
        }
    }
}
