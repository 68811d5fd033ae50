//! Inputs shared by the benchmarks.

use transid_core::geometry::generate_infill;
use transid_core::render::render;
use transid_core::{Frame, InfillPattern, InfillSpec, OpticalParams, Pose, SliceGeometry, TransmissionImage};

pub fn cube(seed: u64) -> SliceGeometry {
    let spec = InfillSpec::cube(InfillPattern::DiamondFill, 0.2).with_seed(seed);
    generate_infill(&spec).expect("default cube is feasible")
}

pub fn image(seed: u64, frame: &Frame) -> TransmissionImage {
    render(&cube(seed), &OpticalParams::default(), &Pose::identity(), frame).expect("cube fits the frame")
}
