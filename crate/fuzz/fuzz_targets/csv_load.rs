#![no_main]

use libfuzzer_sys::fuzz_target;
use qshrink::io::{read_csv, write_dataset};

// Any input either loads or yields a typed error; a successful load survives
// a write/read round trip unchanged.
fuzz_target!(|data: &[u8]| {
    let Ok(loaded) = read_csv(data, "y", None) else {
        return;
    };
    let d = loaded.data;
    assert!(d.n() > 0 && d.p() > 0);
    assert!(d.y().iter().chain(d.x().iter()).all(|v| v.is_finite()));
    let mut buf = Vec::new();
    write_dataset(&d, &mut buf).expect("write");
    let back = read_csv(buf.as_slice(), d.response(), Some(d.labels())).expect("reload");
    assert_eq!(back.data, d);
});
