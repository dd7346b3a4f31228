//! The morphism file parser must reject or canonicalize every input,
//! never panic; whatever parses must survive a text round-trip.

#![no_main]

use libfuzzer_sys::fuzz_target;

use kabelian::Morphism;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(m) = Morphism::parse(s) {
        let text = m.to_text();
        let back = Morphism::parse(&text).expect("canonical text parses");
        assert_eq!(back.to_text(), text);
        assert!(m.images().iter().all(|w| !w.is_empty()));
        assert!(m.prefix().len() <= m.min_image_len());
        assert!(m.suffix().len() <= m.min_image_len());
    }
});
