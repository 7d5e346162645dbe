from guidedbo._threads import limit_blas_threads

limit_blas_threads()
