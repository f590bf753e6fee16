//! Certified inner approximations of regions of attraction for polynomial
//! dynamical systems.
//!
//! The pipeline: encode Lyapunov conditions on a ball as sum-of-squares
//! identities ([`sos`]), compile them to semidefinite programs and solve with
//! the built-in interior-point solver ([`sdp`]), bisect on the ball radius and
//! extract the largest certified sublevel set ([`roa`]), then cross-check the
//! result against trajectory integration ([`odesim`]) and measure set
//! distances ([`setgeom`]).

pub mod cli;
pub mod linalg;
pub mod odesim;
pub mod poly;
pub mod roa;
pub mod sdp;
pub mod setgeom;
pub mod sos;

use std::fmt;

/// Floating-point scalar the numeric core is generic over.
///
/// Blanket-implemented for `f32` and `f64`; everything downstream of the CLI
/// uses the `f64` aliases below.
pub trait Scalar:
    num_traits::Float + num_traits::FromPrimitive + fmt::Debug + fmt::Display + Send + Sync + 'static
{
    /// Shorthand for converting literal tolerances and tableau constants.
    fn c(v: f64) -> Self {
        Self::from_f64(v).expect("constant representable in scalar type")
    }
}

impl<T> Scalar for T where
    T: num_traits::Float
        + num_traits::FromPrimitive
        + fmt::Debug
        + fmt::Display
        + Send
        + Sync
        + 'static
{
}

pub type Monomial = poly::Monomial;
pub type Polynomial64 = poly::Polynomial<f64>;
pub type VectorField64 = poly::VectorField<f64>;
pub type SdpProblem64 = sdp::SdpProblem<f64>;
pub type SdpSolution64 = sdp::SdpSolution<f64>;
pub type SosProgram64 = sos::SosProgram<f64>;
pub type SosCertificate64 = sos::SosCertificate<f64>;
pub type Trajectory64 = odesim::Trajectory<f64>;
pub type PointSet64 = setgeom::PointSet<f64>;
pub type RoaEstimate64 = roa::RoaEstimate<f64>;
