#![no_main]

use gpe_semiclassical::io::{decode_kernel, encode_kernel};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok((kernel, trailer)) = decode_kernel(data) {
        assert_eq!(kernel.entries.len(), kernel.x_grid.len() * kernel.x0_grid.len());
        let bytes = encode_kernel(&kernel, &trailer);
        assert_eq!(bytes.as_slice(), data);
    }
});
