#![no_main]

use cadmine::svm::SavedModel;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(model) = SavedModel::read(data) else { return };
    let mut out = Vec::new();
    model.write(&mut out).expect("writing a parsed model succeeds");
    let again = SavedModel::read(out.as_slice()).expect("written model parses");
    assert_eq!(model.feature_names, again.feature_names);
    assert_eq!(model.model.support_vectors, again.model.support_vectors);
});
