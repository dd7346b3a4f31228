//! The digit parser must reject or round-trip every input, never panic.

#![no_main]

use libfuzzer_sys::fuzz_target;

use kabelian::Word;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(w) = Word::from_digits(s) {
        assert_eq!(w.to_string(), s);
        assert!(w.letters().iter().all(|&c| (c as usize) < w.alphabet()));
    }
    if let Ok(w) = Word::from_digits_with_alphabet(s, 4) {
        assert_eq!(w.alphabet(), 4);
        assert_eq!(w.to_string(), s);
    }
});
