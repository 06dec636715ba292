pub mod hand_lps;
