/*
 * DRB001-antidep1-orig-yes.c (test fixture)
 *
 * Benchmark sources carry a long license banner ahead of the code, so
 * race annotations in the wild reference line numbers well past 40.
 * The padding below reproduces that layout: the annotation sits on
 * line 49 and the racy statement on line 64.
 *
 * ---
 * ---
 * ---
 * ---
 * ---
 * ---
 * ---
 * ---
 * ---
 * ---
 * ---
 * ---
 * ---
 * ---
 * ---
 * ---
 * ---
 * ---
 * ---
 * ---
 * ---
 * ---
 * ---
 * ---
 * ---
 * ---
 * ---
 * ---
 * ---
 * ---
 * ---
 * ---
 * ---
 * ---
 * ---
 * ---
 * ---
 */
/*
A loop with loop-carried anti-dependence.
Data race pair: a[i+1]@64:10:R vs. a[i]@64:5:W
*/
#include <stdio.h>
int main(int argc, char* argv[])
{
  int i;
  int len = 1000;

  int a[1000];

  for (i=0; i<len; i++)
    a[i]= i;

#pragma omp parallel for
  for (i=0;i< len -1 ;i++)
    a[i]=a[i+1]+1;

  printf ("a[500]=%d \n", a[500]);
  return 0;
}
