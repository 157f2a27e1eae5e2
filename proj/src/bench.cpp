namespace cflpfd {}
