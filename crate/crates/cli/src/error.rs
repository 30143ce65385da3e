use serde::Serialize;
use thiserror::Error;
use torusforge::averaging::AveragingError;
use torusforge::criteria::{BaseError, PerturbationError, SystemError};
use torusforge::expr::ParseError;
use torusforge::flow::FlowError;
use torusforge::lift::LiftError;
use torusforge::torus::TorusError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_NOT_APPLICABLE: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Schema(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    System(#[from] SystemError),
    #[error(transparent)]
    Base(#[from] BaseError),
    #[error(transparent)]
    Perturbation(#[from] PerturbationError),
    #[error(transparent)]
    Averaging(#[from] AveragingError),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Torus(#[from] TorusError),
    #[error(transparent)]
    Lift(#[from] LiftError),
    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Serialize)]
pub struct ErrorObject {
    pub kind: &'static str,
    pub message: String,
    pub exit_code: i32,
}

fn parse_kind(e: &ParseError) -> &'static str {
    match e {
        ParseError::Syntax { .. } => "Syntax",
        ParseError::UnknownIdentifier { .. } => "UnknownIdentifier",
        ParseError::ExponentTooLarge { .. } => "ExponentTooLarge",
        ParseError::ZeroDenominator { .. } => "ZeroDenominator",
    }
}

fn system_kind(e: &SystemError) -> &'static str {
    match e {
        SystemError::Parse { source, .. } => parse_kind(source),
        SystemError::ConstantTermPresent { .. } => "ConstantTermPresent",
        SystemError::LinearTermPresent { .. } => "LinearTermPresent",
        SystemError::ParameterInUnperturbed { .. } => "ParameterInUnperturbed",
        SystemError::SliceNonzeroAtOrigin { .. } => "SliceNonzeroAtOrigin",
    }
}

fn base_kind(e: &BaseError) -> (&'static str, i32) {
    match e {
        BaseError::DegenerateSum => ("DegenerateSum", EXIT_NOT_APPLICABLE),
    }
}

fn perturbation_kind(e: &PerturbationError) -> (&'static str, i32) {
    use PerturbationError::*;
    match e {
        System(s) => (system_kind(s), EXIT_ERROR),
        BadInterval { .. } => ("BadInterval", EXIT_ERROR),
        ZeroDivergence => ("ZeroDivergence", EXIT_NOT_APPLICABLE),
        ZeroLaplacian => ("ZeroLaplacian", EXIT_NOT_APPLICABLE),
        NoRootInInterval { .. } => ("NoRootInInterval", EXIT_NOT_APPLICABLE),
        GammaNonNegative { .. } => ("GammaNonNegative", EXIT_NOT_APPLICABLE),
        DegenerateTransversality { .. } => ("DegenerateTransversality", EXIT_NOT_APPLICABLE),
    }
}

fn flow_kind(e: &FlowError) -> &'static str {
    match e {
        FlowError::InvalidConfig => "InvalidConfig",
        FlowError::StepSizeUnderflow { .. } => "StepSizeUnderflow",
        FlowError::NonFiniteState { .. } => "NonFiniteState",
        FlowError::TooManySteps { .. } => "TooManySteps",
        FlowError::NoReturnWithinHorizon { .. } => "NoReturnWithinHorizon",
        FlowError::TangencyDetected { .. } => "TangencyDetected",
        FlowError::JetTransportUnstable { .. } => "JetTransportUnstable",
    }
}

fn averaging_kind(e: &AveragingError) -> (&'static str, i32) {
    use AveragingError::*;
    match e {
        Domain { .. } => ("Domain", EXIT_ERROR),
        QuadratureNotConverged { .. } => ("QuadratureNotConverged", EXIT_ERROR),
        NewtonDiverged { .. } => ("NewtonDiverged", EXIT_ERROR),
        GammaNonNegative { .. } => ("GammaNonNegative", EXIT_NOT_APPLICABLE),
        ComplexPairLost { .. } => ("ComplexPairLost", EXIT_NOT_APPLICABLE),
        UnitCircleCrossingNotFound { .. } => ("UnitCircleCrossingNotFound", EXIT_NOT_APPLICABLE),
        StrongResonance { .. } => ("StrongResonance", EXIT_NOT_APPLICABLE),
        ZeroEps => ("ZeroEps", EXIT_ERROR),
        Flow(f) => (flow_kind(f), EXIT_ERROR),
        Perturbation(p) => perturbation_kind(p),
    }
}

impl CliError {
    pub fn kind(&self) -> (&'static str, i32) {
        match self {
            CliError::Schema(_) => ("Schema", EXIT_ERROR),
            CliError::Io { .. } => ("Io", EXIT_ERROR),
            CliError::Csv(_) => ("Io", EXIT_ERROR),
            CliError::System(e) => (system_kind(e), EXIT_ERROR),
            CliError::Base(e) => base_kind(e),
            CliError::Perturbation(e) => perturbation_kind(e),
            CliError::Averaging(e) => averaging_kind(e),
            CliError::Flow(e) => (flow_kind(e), EXIT_ERROR),
            CliError::Torus(e) => match e {
                TorusError::ZeroEps => ("ZeroEps", EXIT_ERROR),
                TorusError::FixedPointNotFound(_) => ("FixedPointNotFound", EXIT_NOT_APPLICABLE),
                TorusError::IterationEscaped => ("IterationEscaped", EXIT_ERROR),
                TorusError::NonMonotoneLift { .. } => ("NonMonotoneLift", EXIT_ERROR),
                TorusError::TooFewIterates { .. } => ("TooFewIterates", EXIT_ERROR),
            },
            CliError::Lift(e) => match e {
                LiftError::InvalidSeed(_) => ("InvalidSeed", EXIT_ERROR),
                LiftError::PerturbationBudgetExceeded { .. } => ("PerturbationBudgetExceeded", EXIT_ERROR),
                LiftError::NoSeparatingXFound => ("NoSeparatingXFound", EXIT_ERROR),
                LiftError::ZeroComponentAtP { .. } => ("ZeroComponentAtP", EXIT_ERROR),
                LiftError::NoPositiveOmegaFound => ("NoPositiveOmegaFound", EXIT_NOT_APPLICABLE),
                LiftError::L1NotTunable => ("L1NotTunable", EXIT_NOT_APPLICABLE),
                LiftError::System(s) => (system_kind(s), EXIT_ERROR),
                LiftError::Base(b) => base_kind(b),
            },
        }
    }

    pub fn object(&self) -> ErrorObject {
        let (kind, exit_code) = self.kind();
        ErrorObject {
            kind,
            message: self.to_string(),
            exit_code,
        }
    }
}
