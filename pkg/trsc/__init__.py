# TRS-C solver and certifier: spectral, convexlib, global_solver, local, certify, builder, instance_io
