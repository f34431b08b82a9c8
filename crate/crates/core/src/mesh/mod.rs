pub mod diffeo;
pub mod field;
pub mod io;
pub mod ops;
pub mod random;
pub mod spectral;
pub mod torus;

pub use diffeo::{flow, pullback_density, pullback_metric, pullback_scalar, pullback_tensor, pullback_vector, Diffeomorphism};
pub use field::{DensityField, MeshVectorField, MetricField, ScalarField, SymTensorField};
pub use ops::{bv_differential, laplace_beltrami, lie_derivative_metric, lie_derivative_scalar};
pub use spectral::InterpolationMethod;
pub use torus::TorusMesh;
