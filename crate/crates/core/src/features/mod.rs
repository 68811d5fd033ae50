//! Hessian-based keypoints, upright Haar descriptors and ratio-test
//! matching.

mod describe;
mod detect;
mod integral;
mod matching;

pub use describe::{describe, describe_in, describe_one, Descriptor, FeatureSet, DESCRIPTOR_LEN};
pub use detect::{
    detect_in, detect_keypoints, filter_size, hessian, hessian_response, DetectorParams, Keypoint,
};
pub use integral::{integral_image, IntegralImage};
pub use matching::{
    extract_features, match_knn, match_rate_matrix, match_rates, ratio_test, survivors, KnnMatch,
    MatchParams, MatchRateMatrix, MatchReportError,
};
