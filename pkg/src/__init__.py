# CGP search engine for CNN and approximate multiplier co-design
