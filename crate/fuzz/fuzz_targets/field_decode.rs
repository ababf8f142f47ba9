#![no_main]

use heatlab::noise::{decode_field, encode_field};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(blob) = decode_field(data) {
        let bytes = encode_field(&blob).expect("decoded blob re-encodes");
        assert_eq!(bytes.as_slice(), data);
    }
});
