//! Spatial decomposition of a live webpage into independently placed panels.
//!
//! A browser renders the page ([`bridge`]); every captured frame is cut into
//! per-panel crops ([`decomposer`]) according to a layout document
//! ([`layout`]); crops are streamed to workspace clients and their input is
//! mapped back into the page ([`session`], [`protocol`]). Panel placement and
//! touch/ray input modes follow [`policy`]. [`replay`] drives all of it
//! deterministically against the mock browser.
//!
//! Geometry and policy code is generic over [`Scalar`]; the aliases below fix
//! the scalar to `f64`, which is what the rest of the crate uses.

pub mod bitmap;
pub mod bridge;
pub mod clock;
pub mod config;
pub mod decomposer;
pub mod geometry;
pub mod layout;
pub mod policy;
pub mod protocol;
pub mod replay;
pub mod scalar;
pub mod session;
pub mod spatial;

pub use scalar::Scalar;

pub type PagePoint = geometry::PagePoint<f64>;
pub type ViewportPoint = geometry::ViewportPoint<f64>;
pub type RegionRect = geometry::RegionRect<f64>;
pub type UnitPoint = geometry::UnitPoint<f64>;
pub type ViewportMetrics = geometry::ViewportMetrics<f64>;
pub use geometry::FrameRect;

pub type Vec3 = spatial::Vec3<f64>;
pub type Quat = spatial::Quat<f64>;
pub type PanelPose = policy::PanelPose<f64>;
pub type PanelSize = policy::PanelSize<f64>;
pub type SurfacePlane = policy::SurfacePlane<f64>;
pub type PolicyConfig = policy::PolicyConfig<f64>;

pub type RegionRectF32 = geometry::RegionRect<f32>;
pub type UnitPointF32 = geometry::UnitPoint<f32>;
pub type ViewportMetricsF32 = geometry::ViewportMetrics<f32>;
pub type PanelPoseF32 = policy::PanelPose<f32>;
pub type PolicyConfigF32 = policy::PolicyConfig<f32>;
