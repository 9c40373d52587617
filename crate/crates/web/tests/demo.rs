use msd_web::demo::{havok_reconstruction, phase_portrait, sindy_fit};

#[test]
fn portrait_has_matching_axes() {
    let p = phase_portrait("lorenz", 256.0, 2.0).unwrap();
    assert_eq!(p.x.len(), 512);
    assert_eq!(p.x.len(), p.y.len());
    assert_eq!(p.names, ["x", "y"]);
}

#[test]
fn higher_rank_reconstructs_better() {
    let low = havok_reconstruction("vanderpol", 64, 4).unwrap();
    let high = havok_reconstruction("vanderpol", 64, 24).unwrap();
    assert_eq!(low.prediction.len(), low.truth.len());
    assert!(high.train_rmse < low.train_rmse, "{} vs {}", high.train_rmse, low.train_rmse);
}

#[test]
fn threshold_controls_sparsity() {
    let fit = sindy_fit("lorenz", 0.1, 4096.0).unwrap();
    assert!(fit.support_match);
    assert_eq!(fit.nonzero, 7);
    assert_eq!(sindy_fit("lorenz", 1000.0, 4096.0).unwrap().nonzero, 0);
}

#[test]
fn unknown_system_is_an_error() {
    assert!(phase_portrait("nosuch", 256.0, 1.0).is_err());
}
