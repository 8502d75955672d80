//! Explicit supersolutions near a boundary point where the strong Serrin condition fails,
//! and the height estimate they yield.

mod assembly;
mod constants;
mod profiles;

pub use assembly::{assemble_v, assemble_w, verify_supersolution, RegionField, SupersolutionCheck};
pub use constants::{
    compute_constants, height_bound, sphere_trace_connected, BoundaryPoint, HeightBound, LemmaConstants,
};
pub use profiles::{phi_defect, psi_defect, PhiProfile, PsiProfile, Triple};
