//! Exit-code policy: 2 for anything wrong with inputs, artifacts, or
//! configuration; 3 when a numerical routine aborted (diverged training,
//! non-finite gradients, a repair loop that never settled). The split lets
//! callers retry code-3 failures with a different seed without re-checking
//! their files.

use std::fmt;
use std::path::Path;

pub const EXIT_VALIDATION: u8 = 2;
pub const EXIT_NUMERIC: u8 = 3;

/// Terminal failure carrying the message printed to stderr and the process
/// exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub msg: String,
}

impl CliError {
    pub fn validation(msg: impl Into<String>) -> Self {
        CliError { code: EXIT_VALIDATION, msg: msg.into() }
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        CliError { code: EXIT_NUMERIC, msg: msg.into() }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.msg)
    }
}

fn nn_is_numeric(e: &nn_core_err::NnError) -> bool {
    matches!(
        e,
        nn_core_err::NnError::NanGradient | nn_core_err::NnError::NonFinite { .. }
    )
}

// The nn error type is re-exported by both model crates; either path works.
mod nn_core_err {
    pub use dcvae::NnError;
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::validation(format!("I/O failure: {e}"))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::validation(format!("bad JSON: {e}"))
    }
}

impl From<voxel_core::VoxelError> for CliError {
    fn from(e: voxel_core::VoxelError) -> Self {
        CliError::validation(e.to_string())
    }
}

impl From<design_gen::GenError> for CliError {
    fn from(e: design_gen::GenError) -> Self {
        match e {
            design_gen::GenError::RepairDiverged { .. } => CliError::numeric(e.to_string()),
            other => CliError::validation(other.to_string()),
        }
    }
}

impl From<surrogate_sim::SimError> for CliError {
    fn from(e: surrogate_sim::SimError) -> Self {
        CliError::validation(e.to_string())
    }
}

impl From<dcvae::DcvaeError> for CliError {
    fn from(e: dcvae::DcvaeError) -> Self {
        match &e {
            dcvae::DcvaeError::TrainingDiverged { .. } => CliError::numeric(e.to_string()),
            dcvae::DcvaeError::Nn(inner) if nn_is_numeric(inner) => {
                CliError::numeric(e.to_string())
            }
            dcvae::DcvaeError::Gen(design_gen::GenError::RepairDiverged { .. }) => {
                CliError::numeric(e.to_string())
            }
            _ => CliError::validation(e.to_string()),
        }
    }
}

impl From<design_opt::OptError> for CliError {
    fn from(e: design_opt::OptError) -> Self {
        match &e {
            design_opt::OptError::TrainingDiverged { .. } => CliError::numeric(e.to_string()),
            design_opt::OptError::Nn(inner) if nn_is_numeric(inner) => {
                CliError::numeric(e.to_string())
            }
            design_opt::OptError::Dcvae(inner) => {
                let mapped: CliError = inner_dcvae(inner);
                CliError { code: mapped.code, msg: e.to_string() }
            }
            _ => CliError::validation(e.to_string()),
        }
    }
}

// Borrowed nested classification: clone-free peek at the dcvae error class.
fn inner_dcvae(e: &dcvae::DcvaeError) -> CliError {
    let numeric = matches!(e, dcvae::DcvaeError::TrainingDiverged { .. })
        || matches!(e, dcvae::DcvaeError::Nn(inner) if nn_is_numeric(inner));
    if numeric {
        CliError::numeric(String::new())
    } else {
        CliError::validation(String::new())
    }
}

impl From<meshing::MeshError> for CliError {
    fn from(e: meshing::MeshError) -> Self {
        CliError::validation(e.to_string())
    }
}

/// Prefixes a failing result's message with the file or directory it concerns.
pub trait At<T> {
    fn at(self, path: &Path) -> Result<T, CliError>;
}

impl<T, E: Into<CliError>> At<T> for Result<T, E> {
    fn at(self, path: &Path) -> Result<T, CliError> {
        self.map_err(|e| {
            let inner: CliError = e.into();
            CliError { code: inner.code, msg: format!("{}: {}", path.display(), inner.msg) }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diverged_training_maps_to_the_numeric_code() {
        let e: CliError = dcvae::DcvaeError::Nn(dcvae::NnError::NanGradient).into();
        assert_eq!(e.code, EXIT_NUMERIC);

        let e: CliError = design_opt::OptError::TrainingDiverged { epoch: 7 }.into();
        assert_eq!(e.code, EXIT_NUMERIC);

        let e: CliError = design_gen::GenError::RepairDiverged { rounds: 40 }.into();
        assert_eq!(e.code, EXIT_NUMERIC);
    }

    #[test]
    fn input_problems_map_to_the_validation_code() {
        let e: CliError = serde_json::from_str::<u32>("{").unwrap_err().into();
        assert_eq!(e.code, EXIT_VALIDATION);

        let e: CliError =
            surrogate_sim::SimError::Infeasible("no flow path".into()).into();
        assert_eq!(e.code, EXIT_VALIDATION);

        let e: CliError = meshing::MeshError::ZeroPitch.into();
        assert_eq!(e.code, EXIT_VALIDATION);
    }

    #[test]
    fn path_context_is_prepended() {
        let r: Result<(), std::io::Error> =
            Err(std::io::Error::new(std::io::ErrorKind::NotFound, "gone"));
        let e = r.at(Path::new("/tmp/x.json")).unwrap_err();
        assert!(e.msg.starts_with("/tmp/x.json: "));
        assert_eq!(e.code, EXIT_VALIDATION);
    }
}
