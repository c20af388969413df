//! Analytic incremental Green's functions (transition densities) and the
//! strain functionals `h(t)`, `p(t)` they depend on.

mod consistency;
mod density;
mod strain;

pub use consistency::{
    chapman_kolmogorov_check, check_consistency, observed_order, ChapmanKolmogorovReport,
    ConsistencyReport, MomentEstimate,
};
pub use density::{
    drift_kernel, gaussian_density, heat_kernel, ou_kernel, DriftKernel, HeatKernel, KernelSpec,
    OuKernel, TransitionKernel, DELTA_LIMIT_RATIO,
};
pub use strain::{
    strain_h, strain_p, strain_path_sample, strain_path_sample_stream, ConstantStrain,
    EndpointWeight, Fluctuation, FunctionStrain, SampledStrain, StrainModel, StrainPath,
};
