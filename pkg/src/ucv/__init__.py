"""Decision toolkit for first-order logic over unary conjunctive views."""
