#![no_main]

use cadmine::binarize::BinaryMatrix;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(m) = BinaryMatrix::read_csv(data) else { return };
    let mut out = Vec::new();
    m.write_csv(&mut out).expect("writing a parsed matrix succeeds");
    let again = BinaryMatrix::read_csv(out.as_slice()).expect("written matrix parses");
    assert_eq!(m, again);
});
