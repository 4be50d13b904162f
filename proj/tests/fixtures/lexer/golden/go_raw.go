x := `y
z`
ch <- x