//! Diagonal-covariance Gaussian mixtures and Fisher-vector encoding.
