package main

import (
	"fmt"
	"strings"
)

// Shape describes a polygon.
type Shape struct {
	Name  string
	Sides int
}

func (s *Shape) Describe() string {
	raw := `raw string with "quotes" and func`
	return fmt.Sprintf("%s has %d sides %q", s.Name, s.Sides, raw)
}

func main() {
	shapes := []Shape{{"triangle", 3}, {Name: "square", Sides: 4}}
	var total int
	for _, sh := range shapes {
		total += sh.Sides
	}
	ch := make(chan int, 1)
	ch <- total
	r := 'x'
	fmt.Println(strings.ToUpper(shapes[0].Describe()), <-ch, r, 0x1p-2)
}
